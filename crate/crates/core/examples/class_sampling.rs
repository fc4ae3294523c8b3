//! Draws random impulse families satisfying a dwell-time bound and simulates
//! one of them.

use impulsive_iss::dwell::{minimal_mu, sample_in_class, ClassSpec, DwellTimeProblem};
use impulsive_iss::model::{ImpulsiveSystem, InputSignal, SystemConfig};
use impulsive_iss::sim::{check_iss_envelope, simulate, ExpDecayBound};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let class = ClassSpec {
        mu: 2f64.ln(),
        lambda: 0.1,
        c: 0.2,
        d: vec![-(2f64.ln()), -(0.6f64.ln())],
        t0: 0.0,
        horizon: 20.0,
    };
    let family = sample_in_class(seed, &class, 0.5)?;
    for (i, seq) in family.sequences.iter().enumerate() {
        println!("sequence {}: {:?}", i + 1, seq.realize(0.0, 20.0)?);
    }
    let prob = DwellTimeProblem::from_family(&family, &class.d, class.c, class.lambda, 0.0, 20.0)?;
    println!("mu* = {:.4} <= {:.4}", minimal_mu(&prob)?.mu_star, class.mu);

    let mut cfg: SystemConfig = serde_json::from_str(
        r#"{"n": 1, "flow": ["-0.2*x1"], "jumps": [
              {"sequence": {"kind": "explicit", "times": []}, "map": ["2*x1"]},
              {"sequence": {"kind": "explicit", "times": []}, "map": ["0.6*x1"]}]}"#,
    )?;
    for (jump, seq) in cfg.jumps.iter_mut().zip(&family.sequences) {
        jump.sequence = seq.clone();
    }
    let sys = ImpulsiveSystem::from_config(&cfg)?.validated(20.0)?;
    let traj = simulate(&sys, &[1.0], &InputSignal::Zero(0), 20.0, 1e-3)?;
    println!("x(20) = {:.6}", traj.final_state()[0]);
    let bound = ExpDecayBound {
        scale: 2.0,
        rate: 0.1,
    };
    println!("envelope 2 e^(-0.1 t): {:?}", check_iss_envelope(&traj, &InputSignal::Zero(0), bound, 0.0)?);
    Ok(())
}
