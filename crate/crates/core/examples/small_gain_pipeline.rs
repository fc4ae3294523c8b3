//! Two scalar subsystems jumping at odd and even times, composed by the
//! small-gain construction and checked end to end.

use impulsive_iss::certify::{SamplingRegion, SubsystemCertificate, SubsystemCertificateConfig};
use impulsive_iss::model::{Subsystem, SubsystemConfig};
use impulsive_iss::smallgain::{iss_pipeline, PipelineConfig};
use impulsive_iss::timegrid::ImpulseSequence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let delta = 0.1;
    let c1 = 1.0 + delta;
    let x = SubsystemConfig {
        n: 1,
        m: 0,
        flow: vec![format!("-{c1}*x1*(1 + exp({c1}*abs(x1))) + abs(x2)*exp(abs(x2))")],
        jump: vec!["3*x1".into()],
        sequence: ImpulseSequence::periodic(1.0, 2.0)?,
    };
    let y = SubsystemConfig {
        n: 1,
        m: 0,
        flow: vec!["-x2*(1 + exp(abs(x2))) + abs(x1)*exp(abs(x1))".into()],
        jump: vec!["2*x2".into()],
        sequence: ImpulseSequence::periodic(2.0, 2.0)?,
    };
    let (sx, sy) = Subsystem::pair_from_config(&x, &y)?;

    let cert = |v: &str, c: f64, jump: f64, gain: f64| {
        SubsystemCertificate::from_config(
            &SubsystemCertificateConfig {
                v: v.into(),
                c,
                d_hat: -jump.ln(),
                gain,
                input_gain: "r".into(),
            },
            2,
        )
    };
    let vx = cert("abs(x1)", c1, 3.0, 1.0 / c1)?;
    let vy = cert("abs(x2)", 1.0, 2.0, 1.0)?;

    let cfg = PipelineConfig {
        epsilon: 1e-3,
        sigma: None,
        lambda: 0.05,
        t0: 0.0,
        horizon: 100.0,
        region: SamplingRegion::new(3.0, 0.0, 41).with_tol(1e-6),
    };
    let report = iss_pipeline(&sx, &sy, &vx, &vy, &cfg)?;
    let comp = &report.composition;
    println!("V = {}", comp.v);
    println!("c = {}, d = ({:.6}, {:.6}, {:.6}), sigma = {:.6}", comp.c, comp.d1, comp.d2, comp.d3, comp.sigma);
    println!("gamma(r) = {}", comp.gamma);
    println!("jump classes {:?}", report.jump_roles);
    println!("audit passed: {}", report.audit.passed);
    println!("status {:?}, mu* = {:?}", report.status, report.mu_star);
    Ok(())
}
