//! Simulates x' = -0.2x with x -> 2x at odd times and x -> 0.6x at even
//! times, and prints the jump rows next to the closed form.

use impulsive_iss::model::{ImpulsiveSystem, InputSignal, SystemConfig};
use impulsive_iss::sim::{simulate, SampleTag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg: SystemConfig = serde_json::from_str(
        r#"{"n": 1, "flow": ["-0.2*x1"], "jumps": [
              {"sequence": {"kind": "periodic", "start": 1, "period": 2}, "map": ["2*x1"]},
              {"sequence": {"kind": "periodic", "start": 2, "period": 2}, "map": ["0.6*x1"]}]}"#,
    )?;
    let sys = ImpulsiveSystem::from_config(&cfg)?.validated(6.0)?;
    let traj = simulate(&sys, &[1.0], &InputSignal::Zero(0), 6.0, 1e-3)?;

    println!("{:>4} {:>8} {:>12}", "t", "tag", "x");
    for s in traj.samples.iter().filter(|s| s.tag != SampleTag::Flow) {
        println!("{:>4} {:>8} {:>12.6}", s.t, s.tag.label(), s.x[0]);
    }
    for k in 1..=3 {
        let t = 2.0 * k as f64;
        let exact = (1.2 * (-0.4f64).exp()).powi(k);
        println!("x({t}) = {:.6}  closed form {exact:.6}", traj.state_at(t).unwrap()[0]);
    }

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    println!("{} CSV rows", csv.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count() - 1);
    Ok(())
}
