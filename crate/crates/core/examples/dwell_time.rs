//! Minimal mu, feasible lambda and per-period classification for the two
//! alternating impulse sequences.

use impulsive_iss::dwell::{feasible_lambda, minimal_mu, DwellTimeProblem};
use impulsive_iss::timegrid::{ImpulseSequence, SequenceFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = SequenceFamily::new(vec![
        ImpulseSequence::periodic(1.0, 2.0)?,
        ImpulseSequence::periodic(2.0, 2.0)?,
    ]);

    let cases = [
        ("decaying jumps, c=0.2", [-(2f64.ln()), -(0.6f64.ln())], 0.2, 0.1),
        ("growing jumps, c=1", [-(3f64.ln()), -(2f64.ln())], 1.0, 0.05),
        ("both jumps x3, c=1", [-(3f64.ln()), -(3f64.ln())], 1.0, 0.05),
    ];
    for (name, d, c, lambda) in cases {
        let prob = DwellTimeProblem::from_family(&family, &d, c, lambda, 0.0, 100.0)?;
        let v = minimal_mu(&prob)?;
        println!("{name}");
        println!(
            "  mu* = {:.6} on ({}{}, {}]",
            v.mu_star,
            v.witness.s,
            if v.witness.s_left_limit { "-" } else { "" },
            v.witness.t
        );
        println!("  budget per period {:?} -> {:?}", v.per_period_budget, v.classification);
        println!("  largest lambda for mu = {:.4}: {:?}", v.mu_star, feasible_lambda(&prob, v.mu_star)?);
    }

    // the same timeline with one coefficient per impulse
    let events: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, if k % 2 == 1 { -(3f64.ln()) } else { 0.5 })).collect();
    let flat = DwellTimeProblem::per_event(&events, 1.0, 0.05, 0.0, 10.0)?;
    println!("per-impulse form: mu* = {:.6}", minimal_mu(&flat)?.mu_star);
    Ok(())
}
