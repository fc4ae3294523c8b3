//! Fixed-step simulation of impulsive systems.
//!
//! The flow is integrated with classical RK4 between consecutive impulse
//! times. The last step of each interval is shortened so that it ends exactly
//! on the impulse, where the left limit is recorded and the owning jump map
//! is applied.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;
use crate::model::{ImpulsiveSystem, InputSignal};
use crate::timegrid::TimeGridError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("step {dt} exceeds the smallest gap {gap} between impulse times")]
    StepTooLarge { dt: f64, gap: f64 },
    #[error("horizon {horizon} precedes initial time {t0}")]
    BadHorizon { t0: f64, horizon: f64 },
    #[error("initial state has dimension {found}, system has {expected}")]
    StateDimension { expected: usize, found: usize },
    #[error("input has dimension {found}, system has {expected}")]
    InputDimension { expected: usize, found: usize },
    #[error(transparent)]
    Sequence(#[from] TimeGridError),
    #[error("simulation aborted after t={last_valid_time}: {reason}")]
    Aborted { last_valid_time: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleTag {
    Flow,
    PreJump,
    /// Zero-based index of the jump map that fired.
    PostJump(usize),
}

impl SampleTag {
    /// CSV spelling: `flow`, `pre`, `post:i` with one-based `i`.
    pub fn label(&self) -> String {
        match self {
            SampleTag::Flow => "flow".into(),
            SampleTag::PreJump => "pre".into(),
            SampleTag::PostJump(i) => format!("post:{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub tag: SampleTag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub t0: f64,
    pub horizon: f64,
}

impl Trajectory {
    pub fn initial_state(&self) -> &[f64] {
        &self.samples[0].x
    }

    /// State at `t` after any jump at `t` (right-continuous value).
    pub fn state_at(&self, t: f64) -> Option<&[f64]> {
        self.samples
            .iter()
            .rev()
            .find(|s| s.t == t && s.tag != SampleTag::PreJump)
            .map(|s| s.x.as_slice())
    }

    /// Left limit recorded at impulse time `t`.
    pub fn left_limit_at(&self, t: f64) -> Option<&[f64]> {
        self.samples
            .iter()
            .find(|s| s.t == t && s.tag == SampleTag::PreJump)
            .map(|s| s.x.as_slice())
    }

    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has at least one sample").x
    }

    /// Writes `t,tag,x1,...,xn` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let n = self.samples.first().map_or(0, |s| s.x.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "tag".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.t.to_string(), s.tag.label()];
            row.extend(s.x.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Stepper<'a> {
    sys: &'a ImpulsiveSystem,
    u: &'a InputSignal,
}

impl Stepper<'_> {
    fn rhs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.sys.flow.eval(x, u)
    }

    /// One RK4 step on `[t, t + h)`; the input at the step end is its left limit.
    fn rk4(&self, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>, EvalError> {
        let u0 = self.u.value(t)?;
        let um = self.u.value(t + 0.5 * h)?;
        let u1 = self.u.left_limit(t + h)?;
        let axpy = |a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect() };
        let k1 = self.rhs(x, &u0)?;
        let k2 = self.rhs(&axpy(0.5 * h, &k1), &um)?;
        let k3 = self.rhs(&axpy(0.5 * h, &k2), &um)?;
        let k4 = self.rhs(&axpy(h, &k3), &u1)?;
        Ok((0..x.len())
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
}

fn checked(x: Vec<f64>, last_valid_time: f64) -> Result<Vec<f64>, SimError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(SimError::Aborted {
            last_valid_time,
            reason: "non-finite state".into(),
        })
    }
}

fn aborted(last_valid_time: f64) -> impl Fn(EvalError) -> SimError {
    move |e| SimError::Aborted {
        last_valid_time,
        reason: e.to_string(),
    }
}

/// Simulates `sys` from `x0` at `t0` up to `horizon` with nominal step `dt`.
pub fn simulate(
    sys: &ImpulsiveSystem,
    x0: &[f64],
    u: &InputSignal,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::BadStep(dt));
    }
    if !(horizon >= sys.t0) {
        return Err(SimError::BadHorizon { t0: sys.t0, horizon });
    }
    if x0.len() != sys.n {
        return Err(SimError::StateDimension {
            expected: sys.n,
            found: x0.len(),
        });
    }
    if u.dim() != sys.m {
        return Err(SimError::InputDimension {
            expected: sys.m,
            found: u.dim(),
        });
    }
    let events = sys.family().merge(sys.t0, horizon)?;
    if let Some(gap) = events.windows(2).map(|w| w[1].0 - w[0].0).reduce(f64::min) {
        if dt > gap {
            return Err(SimError::StepTooLarge { dt, gap });
        }
    }

    let stepper = Stepper { sys, u };
    let mut samples = vec![Sample {
        t: sys.t0,
        x: checked(x0.to_vec(), sys.t0)?,
        tag: SampleTag::Flow,
    }];
    let mut x = x0.to_vec();
    let mut start = sys.t0;
    let stops = events.iter().map(|&(t, i)| (t, Some(i))).chain(
        // trailing flow segment when the horizon is not itself an impulse time
        (events.last().map_or(true, |e| e.0 < horizon)).then_some((horizon, None)),
    );
    for (stop, jump) in stops {
        let span = stop - start;
        let steps = if span > 0.0 { (span / dt - 1e-9).ceil().max(1.0) as usize } else { 0 };
        let mut t = start;
        for k in 1..=steps {
            let next = if k == steps { stop } else { start + k as f64 * dt };
            x = checked(stepper.rk4(t, &x, next - t).map_err(aborted(t))?, t)?;
            t = next;
            if k < steps || jump.is_none() {
                samples.push(Sample {
                    t,
                    x: x.clone(),
                    tag: SampleTag::Flow,
                });
            }
        }
        if let Some(i) = jump {
            samples.push(Sample {
                t: stop,
                x: x.clone(),
                tag: SampleTag::PreJump,
            });
            let u_left = u.left_limit(stop).map_err(aborted(stop))?;
            x = checked(sys.jumps[i].map.eval(&x, &u_left).map_err(aborted(stop))?, stop)?;
            samples.push(Sample {
                t: stop,
                x: x.clone(),
                tag: SampleTag::PostJump(i),
            });
        }
        start = stop;
    }
    Ok(Trajectory {
        samples,
        t0: sys.t0,
        horizon,
    })
}

/// `beta(r, s) = scale * r * exp(-rate * s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpDecayBound {
    pub scale: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeViolation {
    pub t: f64,
    pub norm: f64,
    pub bound: f64,
}

/// Checks `|x(t)| <= max{beta(|x0|, t - t0), gain * sup |u|}` at every sample.
pub fn check_iss_envelope(
    traj: &Trajectory,
    u: &InputSignal,
    beta: ExpDecayBound,
    gain: f64,
) -> Result<Result<(), EnvelopeViolation>, EvalError> {
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let r0 = norm(traj.initial_state());
    let mut sup_u = 0.0f64;
    let mut prev = traj.t0;
    for s in &traj.samples {
        sup_u = sup_u.max(u.sup_norm(prev, s.t)?);
        prev = s.t;
        let bound = (beta.scale * r0 * (-beta.rate * (s.t - traj.t0)).exp()).max(gain * sup_u);
        let n = norm(&s.x);
        if n > bound {
            return Ok(Err(EnvelopeViolation { t: s.t, norm: n, bound }));
        }
    }
    Ok(Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Scope, VectorExpr};
    use crate::model::{Jump, SystemConfig};
    use crate::timegrid::ImpulseSequence;

    fn example1() -> ImpulsiveSystem {
        let cfg: SystemConfig = serde_json::from_str(
            r#"{"n":1,"flow":["-0.2*x1"],
                "jumps":[{"sequence":{"kind":"periodic","start":1,"period":2},"map":["2*x1"]},
                         {"sequence":{"kind":"periodic","start":2,"period":2},"map":["0.6*x1"]}]}"#,
        )
        .unwrap();
        ImpulsiveSystem::from_config(&cfg).unwrap()
    }

    // exact flow e^{-0.2 t} and multiplicative jumps
    fn example1_exact(t: f64, left: bool) -> f64 {
        let mut x = 1.0;
        let mut last = 0.0;
        for k in 1..=(t.floor() as i32) {
            let tk = k as f64;
            if left && tk == t {
                break;
            }
            x *= (-0.2 * (tk - last)).exp();
            x *= if k % 2 == 1 { 2.0 } else { 0.6 };
            last = tk;
        }
        x * (-0.2 * (t - last)).exp()
    }

    #[test]
    fn example1_matches_closed_form() {
        let sys = example1();
        let traj = simulate(&sys, &[1.0], &InputSignal::Zero(0), 6.0, 1e-3).unwrap();
        let l1 = traj.left_limit_at(1.0).unwrap()[0];
        assert!((l1 - 0.81873).abs() < 1e-4);
        assert!((traj.state_at(1.0).unwrap()[0] - 1.63746).abs() < 1e-4);
        assert!((traj.left_limit_at(2.0).unwrap()[0] - 1.34064).abs() < 1e-4);
        assert!((traj.state_at(2.0).unwrap()[0] - 0.80438).abs() < 1e-4);
        assert!((traj.final_state()[0] - 0.52047).abs() < 1e-4);
        for k in 1..=6 {
            let t = k as f64;
            assert!((traj.left_limit_at(t).unwrap()[0] - example1_exact(t, true)).abs() < 1e-10);
            assert!((traj.state_at(t).unwrap()[0] - example1_exact(t, false)).abs() < 1e-10);
        }
    }

    #[test]
    fn jumps_are_exact() {
        let sys = example1();
        let traj = simulate(&sys, &[1.0], &InputSignal::Zero(0), 6.0, 1e-2).unwrap();
        for w in traj.samples.windows(2) {
            if let (SampleTag::PreJump, SampleTag::PostJump(i)) = (w[0].tag, w[1].tag) {
                assert_eq!(w[0].t, w[1].t);
                let expected = sys.jumps[i].map.eval(&w[0].x, &[]).unwrap();
                assert_eq!(expected[0].to_bits(), w[1].x[0].to_bits());
            }
        }
        assert_eq!(traj.samples.iter().filter(|s| s.tag == SampleTag::PreJump).count(), 6);
    }

    #[test]
    fn zero_flow_is_constant() {
        let sys = ImpulsiveSystem {
            n: 2,
            m: 0,
            flow: VectorExpr::parse(&["0", "0"], Scope::new(2, 0)).unwrap(),
            jumps: vec![],
            t0: 0.0,
        };
        let traj = simulate(&sys, &[1.5, -2.0], &InputSignal::Zero(0), 3.0, 0.1).unwrap();
        assert!(traj.samples.iter().all(|s| s.x == vec![1.5, -2.0]));
        assert_eq!(traj.samples.last().unwrap().t, 3.0);
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let traj = simulate(&example1(), &[0.0], &InputSignal::Zero(0), 6.0, 1e-2).unwrap();
        assert!(traj.samples.iter().all(|s| s.x[0] == 0.0));
    }

    #[test]
    fn argument_errors() {
        let sys = example1();
        let z = InputSignal::Zero(0);
        assert!(matches!(simulate(&sys, &[1.0], &z, 6.0, 1.5), Err(SimError::StepTooLarge { .. })));
        assert!(matches!(simulate(&sys, &[1.0], &z, 6.0, 0.0), Err(SimError::BadStep(_))));
        assert!(matches!(simulate(&sys, &[1.0, 2.0], &z, 6.0, 0.1), Err(SimError::StateDimension { .. })));
    }

    #[test]
    fn blow_up_aborts_with_last_time() {
        let mut sys = example1();
        sys.flow = VectorExpr::parse(&["x1*x1"], Scope::new(1, 0)).unwrap();
        sys.jumps.clear();
        match simulate(&sys, &[1.0], &InputSignal::Zero(0), 5.0, 1e-2) {
            Err(SimError::Aborted { last_valid_time, .. }) => assert!(last_valid_time < 1.1),
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn jump_uses_input_left_limit() {
        let mut sys = example1();
        sys.m = 1;
        sys.flow = VectorExpr::parse(&["0"], Scope::new(1, 1)).unwrap();
        sys.jumps = vec![Jump {
            sequence: ImpulseSequence::explicit(vec![1.0]).unwrap(),
            map: VectorExpr::parse(&["x1 + u1"], Scope::new(1, 1)).unwrap(),
        }];
        let u = InputSignal::Piecewise {
            breakpoints: vec![1.0],
            values: vec![vec![10.0], vec![-100.0]],
        };
        let traj = simulate(&sys, &[0.0], &u, 1.0, 0.1).unwrap();
        assert_eq!(traj.final_state(), &[10.0]);
    }

    #[test]
    fn csv_layout() {
        let traj = simulate(&example1(), &[1.0], &InputSignal::Zero(0), 2.0, 0.5).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,tag,x1");
        assert_eq!(lines[1], "0,flow,1");
        assert!(lines[3].starts_with("1,pre,"));
        assert!(lines[4].starts_with("1,post:1,"));
        assert!(lines.last().unwrap().starts_with("2,post:2,"));
    }

    #[test]
    fn envelope_examples() {
        let z = InputSignal::Zero(0);
        let traj = simulate(&example1(), &[1.0], &z, 60.0, 1e-2).unwrap();
        let beta = ExpDecayBound { scale: 2.0, rate: 0.05 };
        assert_eq!(check_iss_envelope(&traj, &z, beta, 1.0).unwrap(), Ok(()));

        let flat = Trajectory {
            samples: (0..100)
                .map(|k| Sample {
                    t: k as f64,
                    x: vec![1.0],
                    tag: SampleTag::Flow,
                })
                .collect(),
            t0: 0.0,
            horizon: 99.0,
        };
        let v = check_iss_envelope(&flat, &z, ExpDecayBound { scale: 3.0, rate: 0.1 }, 1.0)
            .unwrap()
            .unwrap_err();
        assert!(v.t > 10.0 && v.t < 12.0, "{v:?}");

        let zero = simulate(&example1(), &[0.0], &z, 10.0, 0.1).unwrap();
        assert!(check_iss_envelope(&zero, &z, ExpDecayBound { scale: 0.0, rate: 5.0 }, 0.0)
            .unwrap()
            .is_ok());
    }

    #[test]
    fn rk4_order() {
        let mut sys = example1();
        sys.jumps.clear();
        let err = |dt: f64| {
            let tr = simulate(&sys, &[1.0], &InputSignal::Zero(0), 1.0, dt).unwrap();
            (tr.final_state()[0] - (-0.2f64).exp()).abs()
        };
        let ratio = err(0.5) / err(0.25);
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }
}
