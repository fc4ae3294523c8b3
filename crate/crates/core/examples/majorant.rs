//! Replacing the second jump by the worse factor 3 makes both sequences act
//! alike; the dwell-time bound then grows with the horizon.

use impulsive_iss::dwell::{check, minimal_mu, DwellTimeProblem};
use impulsive_iss::timegrid::{ImpulseSequence, SequenceFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = SequenceFamily::new(vec![
        ImpulseSequence::periodic(1.0, 2.0)?,
        ImpulseSequence::periodic(2.0, 2.0)?,
    ]);
    let d = [-(3f64.ln()), -(3f64.ln())];
    for lambda in [1e-6, 0.05] {
        println!("lambda = {lambda}");
        for horizon in [25.0, 50.0, 100.0, 200.0] {
            let prob = DwellTimeProblem::from_family(&family, &d, 1.0, lambda, 0.0, horizon)?;
            let v = minimal_mu(&prob)?;
            println!("  T = {horizon:>5}: mu* = {:>8.4}  {:?}", v.mu_star, v.classification);
        }
    }
    let prob = DwellTimeProblem::from_family(&family, &d, 1.0, 0.05, 0.0, 100.0)?;
    let res = check(&prob, 10.0)?;
    println!("mu = 10 holds on [0, 100]: {} (witness {:?})", res.passed, res.verdict.witness);
    Ok(())
}
