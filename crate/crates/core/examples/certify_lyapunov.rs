//! Grid-checks V(x) = |x| for x' = -0.2x + u with input-dependent jumps.

use impulsive_iss::certify::{
    check_flow_condition, check_jump_condition, CandidateConfig, LyapunovCandidate, SamplingRegion,
};
use impulsive_iss::model::{ImpulsiveSystem, SystemConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg: SystemConfig = serde_json::from_str(
        r#"{"n": 1, "m": 1, "flow": ["-0.2*x1 + u1"], "jumps": [
              {"sequence": {"kind": "periodic", "start": 1, "period": 2}, "map": ["2*x1 + u1"]},
              {"sequence": {"kind": "periodic", "start": 2, "period": 2}, "map": ["0.6*x1 + u1"]}]}"#,
    )?;
    let sys = ImpulsiveSystem::from_config(&cfg)?;
    let region = SamplingRegion::new(10.0, 1.0, 81);

    for (c, d) in [(0.19, [2f64, 0.6]), (0.25, [2.0, 0.6]), (0.19, [2.01, 0.61])] {
        let cand = LyapunovCandidate::from_config(
            &CandidateConfig {
                v: "abs(x1)".into(),
                c,
                d: d.iter().map(|f| -f.ln()).collect(),
                gamma: "100*r".into(),
            },
            1,
        )?;
        let flow = check_flow_condition(&sys, &cand, &region)?;
        let jump = check_jump_condition(&sys, &cand, &region)?;
        println!(
            "c={c} jump factors {d:?}: flow {:?} ({} violations), jump {:?} ({} violations)",
            flow.verdict,
            flow.counterexamples.len(),
            jump.verdict,
            jump.counterexamples.len()
        );
        if let Some(ce) = jump.counterexamples.first() {
            println!("  e.g. x={:?} u={:?}: {} > {}", ce.x, ce.u, ce.lhs, ce.rhs);
        }
    }
    Ok(())
}
