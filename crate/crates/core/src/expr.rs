//! A small arithmetic language for maps, Lyapunov functions and gains.
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := "-" factor | atom ;
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")" ;
//! ```
//!
//! Variables are `x1..xn` (state) and `u1..um` (input). Gain expressions use a
//! single scalar variable `r`, input signals a single time variable `t`; which
//! one (if any) is admitted is decided by the [`Scope`] passed to the parser.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Zero-based state coordinate; printed as `x{i+1}`.
    State(usize),
    /// Zero-based input coordinate; printed as `u{i+1}`.
    Input(usize),
    /// The scope's scalar variable (`r` or `t`).
    Scalar(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sign,
    Exp,
    Ln,
    Sqrt,
    Pow,
    Min,
    Max,
    Sin,
    Cos,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "min" => Func::Min,
            "max" => Func::Max,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Pow => n == 2,
            Func::Min | Func::Max => n >= 2,
            _ => n == 1,
        }
    }

    fn arity_text(self) -> &'static str {
        match self {
            Func::Pow => "2",
            Func::Min | Func::Max => "at least 2",
            _ => "1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Which identifiers the parser accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub n: usize,
    pub m: usize,
    pub scalar: Option<char>,
}

impl Scope {
    pub fn new(n: usize, m: usize) -> Self {
        Scope { n, m, scalar: None }
    }

    /// Scope of a one-variable gain `gamma(r)`.
    pub fn gain() -> Self {
        Scope {
            n: 0,
            m: 0,
            scalar: Some('r'),
        }
    }

    /// Scope of an input signal component `u(t)`.
    pub fn time() -> Self {
        Scope {
            n: 0,
            m: 0,
            scalar: Some('t'),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{name}` is out of range for dimension {dim}")]
    IndexOutOfRange { name: String, dim: usize },
    #[error("function `{func}` takes {expected} argument(s), got {found}")]
    Arity {
        func: &'static str,
        expected: &'static str,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at line {line}, column {column}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    LogDomain(f64),
    #[error("square root of negative value {0}")]
    SqrtDomain(f64),
    #[error("non-finite result in `{0}`")]
    NonFinite(&'static str),
    #[error("variable {0:?} has no value in this evaluation")]
    Unbound(Var),
}

/// Values bound to variables during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub scalar: f64,
}

impl<'a> Env<'a> {
    pub fn new(x: &'a [f64], u: &'a [f64]) -> Self {
        Env { x, u, scalar: 0.0 }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn finite(v: f64, what: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(what))
    }
}

impl Expr {
    pub fn parse(text: &str, scope: Scope) -> Result<Expr, ParseError> {
        Parser::new(text, scope)?.parse_all()
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn state(i: usize) -> Expr {
        Expr::Var(Var::State(i))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn max(args: Vec<Expr>) -> Expr {
        Expr::Call(Func::Max, args)
    }

    pub fn eval_env(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(var) => {
                let v = match var {
                    Var::State(i) => env.x.get(*i),
                    Var::Input(i) => env.u.get(*i),
                    Var::Scalar(_) => Some(&env.scalar),
                };
                v.copied().ok_or(EvalError::Unbound(*var))
            }
            Expr::Neg(a) => Ok(-a.eval_env(env)?),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval_env(env)?, b.eval_env(env)?);
                match op {
                    BinOp::Add => finite(a + b, "+"),
                    BinOp::Sub => finite(a - b, "-"),
                    BinOp::Mul => finite(a * b, "*"),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero)
                        } else {
                            finite(a / b, "/")
                        }
                    }
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval_env(env)?;
                match func {
                    Func::Abs => Ok(a.abs()),
                    Func::Sign => Ok(sign(a)),
                    Func::Exp => finite(a.exp(), "exp"),
                    Func::Ln => {
                        if a <= 0.0 {
                            Err(EvalError::LogDomain(a))
                        } else {
                            Ok(a.ln())
                        }
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            Err(EvalError::SqrtDomain(a))
                        } else {
                            Ok(a.sqrt())
                        }
                    }
                    Func::Pow => finite(a.powf(args[1].eval_env(env)?), "pow"),
                    Func::Min | Func::Max => {
                        let mut acc = a;
                        for arg in &args[1..] {
                            let v = arg.eval_env(env)?;
                            acc = if *func == Func::Min { acc.min(v) } else { acc.max(v) };
                        }
                        Ok(acc)
                    }
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        self.eval_env(&Env::new(x, u))
    }

    /// Evaluates a one-variable expression (gain or time signal).
    pub fn eval_scalar(&self, s: f64) -> Result<f64, EvalError> {
        self.eval_env(&Env {
            x: &[],
            u: &[],
            scalar: s,
        })
    }

    /// Central-difference gradient with respect to the state,
    /// step `1e-6 * (1 + |x_j|)` per coordinate.
    pub fn grad_fd(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut probe = x.to_vec();
        let mut grad = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let h = 1e-6 * (1.0 + x[j].abs());
            let (lo, hi) = (x[j] - h, x[j] + h);
            probe[j] = hi;
            let fp = self.eval(&probe, u)?;
            probe[j] = lo;
            let fm = self.eval(&probe, u)?;
            probe[j] = x[j];
            grad.push((fp - fm) / (hi - lo));
        }
        Ok(grad)
    }

    /// First-order estimate of the distance from `x` to the nearest point
    /// where `abs`, `sign`, `min` or `max` switches branch. Returns infinity
    /// for expressions without such primitives.
    pub fn kink_distance(&self, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        let mut best = f64::INFINITY;
        self.visit_kinks(x, u, &mut best)?;
        Ok(best)
    }

    fn visit_kinks(&self, x: &[f64], u: &[f64], best: &mut f64) -> Result<(), EvalError> {
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(a) => a.visit_kinks(x, u, best)?,
            Expr::Binary(_, a, b) => {
                a.visit_kinks(x, u, best)?;
                b.visit_kinks(x, u, best)?;
            }
            Expr::Call(func, args) => {
                for a in args {
                    a.visit_kinks(x, u, best)?;
                }
                match func {
                    Func::Abs | Func::Sign => {
                        *best = best.min(level_distance(&args[0], x, u)?);
                    }
                    Func::Min | Func::Max => {
                        let vals = args
                            .iter()
                            .map(|a| a.eval(x, u))
                            .collect::<Result<Vec<_>, _>>()?;
                        let pick = |i: usize, j: usize| {
                            if *func == Func::Max {
                                vals[i] >= vals[j]
                            } else {
                                vals[i] <= vals[j]
                            }
                        };
                        let active = (1..vals.len()).fold(0, |k, i| if pick(i, k) && vals[i] != vals[k] { i } else { k });
                        for (j, other) in args.iter().enumerate() {
                            if j != active {
                                let gap = Expr::binary(BinOp::Sub, args[active].clone(), other.clone());
                                *best = best.min(level_distance(&gap, x, u)?);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Applies `f` to every variable, rebuilding the tree.
    pub fn map_vars(&self, f: &impl Fn(Var) -> Expr) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(v) => f(*v),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_vars(f))),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.map_vars(f), b.map_vars(f)),
            Expr::Call(func, args) => Expr::Call(*func, args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }

    pub fn for_each_var(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) => a.for_each_var(f),
            Expr::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
        }
    }

    /// Smallest `(n, m)` that covers every state and input variable used.
    pub fn required_dims(&self) -> (usize, usize) {
        let (mut n, mut m) = (0, 0);
        self.for_each_var(&mut |v| match v {
            Var::State(i) => n = n.max(i + 1),
            Var::Input(i) => m = m.max(i + 1),
            Var::Scalar(_) => {}
        });
        (n, m)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            _ => 4,
        }
    }
}

fn level_distance(g: &Expr, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
    let value = g.eval(x, u)?;
    let norm = g.grad_fd(x, u)?.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(if norm > 0.0 {
        value.abs() / norm
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

struct Paren<'a>(&'a Expr, bool);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::State(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Input(i)) => write!(f, "u{}", i + 1),
            Expr::Var(Var::Scalar(c)) => write!(f, "{c}"),
            Expr::Neg(a) => write!(f, "-{}", Paren(a, a.precedence() < 3)),
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "{} {sym} {}", Paren(a, a.precedence() < p), Paren(b, b.precedence() <= p))
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// One expression per output coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorExpr {
    pub components: Vec<Expr>,
}

impl VectorExpr {
    pub fn new(components: Vec<Expr>) -> Self {
        VectorExpr { components }
    }

    pub fn parse<S: AsRef<str>>(texts: &[S], scope: Scope) -> Result<Self, ParseError> {
        texts
            .iter()
            .map(|t| Expr::parse(t.as_ref(), scope))
            .collect::<Result<Vec<_>, _>>()
            .map(VectorExpr::new)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.components.iter().map(|c| c.eval(x, u)).collect()
    }

    pub fn required_dims(&self) -> (usize, usize) {
        self.components
            .iter()
            .map(Expr::required_dims)
            .fold((0, 0), |(n, m), (a, b)| (n.max(a), m.max(b)))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.components.iter().map(|c| c.to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Eof,
}

struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        let start = i;
        let tok = if let Some(tok) = single {
            i += 1;
            tok
        } else if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            match lit.parse::<f64>() {
                Ok(v) => Tok::Num(v),
                Err(_) => {
                    return Err(ParseError {
                        kind: ParseErrorKind::Syntax(format!("malformed number `{lit}`")),
                        line: tl,
                        column: tc,
                    })
                }
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            return Err(ParseError {
                kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                line: tl,
                column: tc,
            });
        };
        col += i - start;
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scope: Scope,
}

impl Parser {
    fn new(text: &str, scope: Scope) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: lex(text)?,
            pos: 0,
            scope,
        })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            kind,
            line: t.line,
            column: t.column,
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            other => format!("{other:?}"),
        };
        self.error_here(ParseErrorKind::Syntax(format!("expected {wanted}, found {found}")))
    }

    fn parse_all(mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Eof {
            return Err(self.unexpected("an expression"));
        }
        let e = self.expr()?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("an operator or end of input"));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let start = self.pos;
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    let at = &self.tokens[start];
                    let err = |kind| ParseError {
                        kind,
                        line: at.line,
                        column: at.column,
                    };
                    let func = Func::from_name(&name)
                        .ok_or_else(|| err(ParseErrorKind::UnknownIdentifier(name.clone())))?;
                    if !func.arity_ok(args.len()) {
                        return Err(err(ParseErrorKind::Arity {
                            func: func.name(),
                            expected: func.arity_text(),
                            found: args.len(),
                        }));
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    self.pos = start;
                    let var = self.variable(&name)?;
                    self.bump();
                    Ok(Expr::Var(var))
                }
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }

    fn variable(&self, name: &str) -> Result<Var, ParseError> {
        let unknown = || self.error_here(ParseErrorKind::UnknownIdentifier(name.to_string()));
        let mut chars = name.chars();
        let head = chars.next().ok_or_else(unknown)?;
        let digits = chars.as_str();
        if self.scope.scalar == Some(head) && digits.is_empty() {
            return Ok(Var::Scalar(head));
        }
        if !(head == 'x' || head == 'u')
            || digits.is_empty()
            || digits.starts_with('0')
            || !digits.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(unknown());
        }
        let index: usize = digits.parse().map_err(|_| unknown())?;
        let dim = if head == 'x' { self.scope.n } else { self.scope.m };
        if index > dim {
            return Err(self.error_here(ParseErrorKind::IndexOutOfRange {
                name: name.to_string(),
                dim,
            }));
        }
        Ok(if head == 'x' {
            Var::State(index - 1)
        } else {
            Var::Input(index - 1)
        })
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }
}
