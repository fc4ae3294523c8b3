//! Parsing, printing, evaluating and differentiating expressions.

use impulsive_iss::expr::{Expr, Scope, VectorExpr};

fn main() {
    let scope = Scope::new(2, 1);
    let f = VectorExpr::parse(&["x2", "-sin(x1) - 0.5*x2 + u1"], scope).unwrap();
    println!("f = {:?}", f.to_strings());
    println!("f(1, 0; 0.2) = {:?}", f.eval(&[1.0, 0.0], &[0.2]).unwrap());

    let v = Expr::parse("max(abs(x1), 2*abs(x2))", Scope::new(2, 0)).unwrap();
    for x in [[1.0, 0.2], [0.5, 0.2501]] {
        println!(
            "V{x:?} = {}, grad {:?}, distance to kink {:.4}",
            v.eval(&x, &[]).unwrap(),
            v.grad_fd(&x, &[]).unwrap(),
            v.kink_distance(&x, &[]).unwrap()
        );
    }

    let gain = Expr::parse("pow(r, 2)/(1 + r)", Scope::gain()).unwrap();
    println!("gamma = {gain}, gamma(3) = {}", gain.eval_scalar(3.0).unwrap());

    for bad in ["x1 +", "x3", "ln(x1, x2)", "foo(x1)"] {
        println!("{bad:>12}: {}", Expr::parse(bad, Scope::new(2, 0)).unwrap_err());
    }
    println!("ln(x1) at x1 = -1: {}", Expr::parse("ln(x1)", scope).unwrap().eval(&[-1.0, 0.0], &[0.0]).unwrap_err());
}
