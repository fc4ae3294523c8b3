//! Impulsive systems with one flow map and several jump maps, each jump map
//! bound to its own impulse sequence.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr, ParseError, Scope, Var, VectorExpr};
use crate::timegrid::{self, ImpulseSequence, SequenceFamily, TimeGridError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("cannot parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: ParseError,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Sequence(#[from] TimeGridError),
    #[error("invalid system: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn parse_vec(texts: &[String], scope: Scope, what: impl Fn() -> String) -> Result<VectorExpr, ModelError> {
    VectorExpr::parse(texts, scope).map_err(|source| ModelError::Parse { what: what(), source })
}

/// A jump map together with the impulse times at which it fires.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub sequence: ImpulseSequence,
    pub map: VectorExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsiveSystem {
    pub n: usize,
    pub m: usize,
    pub flow: VectorExpr,
    pub jumps: Vec<Jump>,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub sequence: ImpulseSequence,
    pub map: Vec<String>,
}

/// JSON form of an [`ImpulsiveSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    pub flow: Vec<String>,
    #[serde(default)]
    pub jumps: Vec<JumpConfig>,
    #[serde(default)]
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    FlowDimension { expected: usize, found: usize },
    JumpDimension { jump: usize, expected: usize, found: usize },
    VariableRange { what: String, n: usize, m: usize },
    BadSequence { jump: usize, error: TimeGridError },
    NotDisjoint { time: f64 },
    NotEvaluable { what: String, error: EvalError },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FlowDimension { expected, found } => {
                write!(f, "flow map has {found} components, state dimension is {expected}")
            }
            Violation::JumpDimension { jump, expected, found } => write!(
                f,
                "jump map {} has {found} components, state dimension is {expected}",
                jump + 1
            ),
            Violation::VariableRange { what, n, m } => {
                write!(f, "{what} references variables outside n={n}, m={m}")
            }
            Violation::BadSequence { jump, error } => {
                write!(f, "sequence of jump map {}: {error}", jump + 1)
            }
            Violation::NotDisjoint { time } => write!(f, "sequences not disjoint at t={time}"),
            Violation::NotEvaluable { what, error } => {
                write!(f, "{what} cannot be evaluated at the origin: {error}")
            }
        }
    }
}

impl ImpulsiveSystem {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self, ModelError> {
        let scope = Scope::new(cfg.n, cfg.m);
        let flow = parse_vec(&cfg.flow, scope, || "flow map".into())?;
        let jumps = cfg
            .jumps
            .iter()
            .enumerate()
            .map(|(i, j)| {
                Ok(Jump {
                    sequence: j.sequence.clone(),
                    map: parse_vec(&j.map, scope, || format!("jump map {}", i + 1))?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(ImpulsiveSystem {
            n: cfg.n,
            m: cfg.m,
            flow,
            jumps,
            t0: cfg.t0,
        })
    }

    pub fn to_config(&self) -> SystemConfig {
        SystemConfig {
            n: self.n,
            m: self.m,
            flow: self.flow.to_strings(),
            jumps: self
                .jumps
                .iter()
                .map(|j| JumpConfig {
                    sequence: j.sequence.clone(),
                    map: j.map.to_strings(),
                })
                .collect(),
            t0: self.t0,
        }
    }

    pub fn family(&self) -> SequenceFamily {
        SequenceFamily::new(self.jumps.iter().map(|j| j.sequence.clone()).collect())
    }

    /// Collects every structural problem on `[t0, horizon]`; an empty list
    /// means the system is usable.
    pub fn validate(&self, horizon: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let (n, m) = (self.n, self.m);
        let in_range = |v: &VectorExpr| {
            let (a, b) = v.required_dims();
            a <= n && b <= m
        };
        if self.flow.dim() != n {
            out.push(Violation::FlowDimension {
                expected: n,
                found: self.flow.dim(),
            });
        }
        if !in_range(&self.flow) {
            out.push(Violation::VariableRange {
                what: "flow map".into(),
                n,
                m,
            });
        }
        let mut sequences_ok = true;
        for (i, j) in self.jumps.iter().enumerate() {
            if j.map.dim() != n {
                out.push(Violation::JumpDimension {
                    jump: i,
                    expected: n,
                    found: j.map.dim(),
                });
            }
            if !in_range(&j.map) {
                out.push(Violation::VariableRange {
                    what: format!("jump map {}", i + 1),
                    n,
                    m,
                });
            }
            if let Err(error) = j.sequence.check() {
                sequences_ok = false;
                out.push(Violation::BadSequence { jump: i, error });
            }
        }
        if sequences_ok {
            match self.family().merge(self.t0, horizon.max(self.t0)) {
                Err(TimeGridError::NotDisjoint { time, .. }) => out.push(Violation::NotDisjoint { time }),
                Err(error) => out.push(Violation::BadSequence { jump: 0, error }),
                Ok(_) => {}
            }
        }
        if out.is_empty() {
            let (x, u) = (vec![0.0; n], vec![0.0; m]);
            if let Err(error) = self.flow.eval(&x, &u) {
                out.push(Violation::NotEvaluable {
                    what: "flow map".into(),
                    error,
                });
            }
            for (i, j) in self.jumps.iter().enumerate() {
                if let Err(error) = j.map.eval(&x, &u) {
                    out.push(Violation::NotEvaluable {
                        what: format!("jump map {}", i + 1),
                        error,
                    });
                }
            }
        }
        out
    }

    pub fn validated(self, horizon: f64) -> Result<Self, ModelError> {
        let v = self.validate(horizon);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(ModelError::Invalid(v))
        }
    }
}

/// External input `u(t)`; right-continuous with left limits.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Zero(usize),
    Constant(Vec<f64>),
    /// `values[0]` before the first breakpoint, `values[k]` on `[b_k, b_{k+1})`.
    Piecewise { breakpoints: Vec<f64>, values: Vec<Vec<f64>> },
    /// Components as expressions of `t`.
    Expression(VectorExpr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InputConfig {
    Zero,
    Constant { value: Vec<f64> },
    Piecewise { breakpoints: Vec<f64>, values: Vec<Vec<f64>> },
    Expression { components: Vec<String> },
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl InputSignal {
    /// Builds a signal of dimension `m` (the dimension only matters for `zero`).
    pub fn from_config(cfg: &InputConfig, m: usize) -> Result<Self, ModelError> {
        let sig = match cfg {
            InputConfig::Zero => InputSignal::Zero(m),
            InputConfig::Constant { value } => InputSignal::Constant(value.clone()),
            InputConfig::Piecewise { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(ModelError::Dimension(format!(
                        "piecewise input needs {} value vectors for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ModelError::Dimension("piecewise breakpoints must be strictly increasing".into()));
                }
                if values.iter().any(|v| v.len() != m) {
                    return Err(ModelError::Dimension(format!("piecewise input values must have dimension {m}")));
                }
                InputSignal::Piecewise {
                    breakpoints: breakpoints.clone(),
                    values: values.clone(),
                }
            }
            InputConfig::Expression { components } => {
                InputSignal::Expression(parse_vec(components, Scope::time(), || "input expression".into())?)
            }
        };
        if sig.dim() != m {
            return Err(ModelError::Dimension(format!(
                "input has dimension {}, system expects {m}",
                sig.dim()
            )));
        }
        Ok(sig)
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSignal::Zero(m) => *m,
            InputSignal::Constant(v) => v.len(),
            InputSignal::Piecewise { values, .. } => values[0].len(),
            InputSignal::Expression(e) => e.dim(),
        }
    }

    pub fn value(&self, t: f64) -> Result<Vec<f64>, EvalError> {
        self.at(t, false)
    }

    /// `u^-(t)`: the value on the interval ending at `t`.
    pub fn left_limit(&self, t: f64) -> Result<Vec<f64>, EvalError> {
        self.at(t, true)
    }

    fn at(&self, t: f64, left: bool) -> Result<Vec<f64>, EvalError> {
        Ok(match self {
            InputSignal::Zero(m) => vec![0.0; *m],
            InputSignal::Constant(v) => v.clone(),
            InputSignal::Piecewise { breakpoints, values } => {
                let k = if left {
                    breakpoints.partition_point(|b| *b < t)
                } else {
                    breakpoints.partition_point(|b| *b <= t)
                };
                values[k].clone()
            }
            InputSignal::Expression(e) => e
                .components
                .iter()
                .map(|c| c.eval_scalar(t))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Supremum of `|u(s)|` over `s` in `[a, b]`. Exact except for
    /// expression signals, which are sampled at 33 points per call.
    pub fn sup_norm(&self, a: f64, b: f64) -> Result<f64, EvalError> {
        Ok(match self {
            InputSignal::Zero(_) => 0.0,
            InputSignal::Constant(v) => euclid(v),
            InputSignal::Piecewise { breakpoints, values } => {
                let lo = breakpoints.partition_point(|p| *p <= a);
                let hi = breakpoints.partition_point(|p| *p <= b);
                values[lo..=hi].iter().map(|v| euclid(v)).fold(0.0, f64::max)
            }
            InputSignal::Expression(_) => {
                let mut best = 0.0f64;
                for i in 0..=32 {
                    let s = a + (b - a) * (i as f64) / 32.0;
                    best = best.max(euclid(&self.value(s)?));
                }
                best
            }
        })
    }
}

/// One half of a two-system interconnection.
///
/// Maps are written over the full coupled state `x1..x{N1+N2}` (this
/// subsystem's block first for the first subsystem, second for the second)
/// and the subsystem's own input `u1..u{M_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsystem {
    pub n: usize,
    pub m: usize,
    pub flow: VectorExpr,
    pub jump: VectorExpr,
    pub sequence: ImpulseSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemConfig {
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    pub flow: Vec<String>,
    pub jump: Vec<String>,
    pub sequence: ImpulseSequence,
}

impl Subsystem {
    /// `total_n` is the state dimension of the whole interconnection.
    pub fn from_config(cfg: &SubsystemConfig, total_n: usize) -> Result<Self, ModelError> {
        let scope = Scope::new(total_n, cfg.m);
        Ok(Subsystem {
            n: cfg.n,
            m: cfg.m,
            flow: parse_vec(&cfg.flow, scope, || "subsystem flow map".into())?,
            jump: parse_vec(&cfg.jump, scope, || "subsystem jump map".into())?,
            sequence: cfg.sequence.clone(),
        })
    }

    /// Parses both halves of an interconnection at once.
    pub fn pair_from_config(a: &SubsystemConfig, b: &SubsystemConfig) -> Result<(Self, Self), ModelError> {
        let total = a.n + b.n;
        Ok((Self::from_config(a, total)?, Self::from_config(b, total)?))
    }
}

/// Which subsystems jump at the impulses of a composed sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpRole {
    OnlyFirst,
    OnlySecond,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interconnection {
    pub system: ImpulsiveSystem,
    /// Role of each entry of `system.jumps`, in the same order.
    pub roles: Vec<JumpRole>,
    pub n1: usize,
    pub n2: usize,
    pub m1: usize,
    pub m2: usize,
}

/// Composes two subsystems into one impulsive system with state `(x1, x2)`
/// and input `(u1, u2)`.
///
/// The impulse times are split into those of the first subsystem only, the
/// second only, and both; each class gets its own jump map, padded with the
/// identity on the block that does not jump. Classes with no impulse on
/// `(t0, horizon]` are dropped.
pub fn interconnect(
    first: &Subsystem,
    second: &Subsystem,
    t0: f64,
    horizon: f64,
) -> Result<Interconnection, ModelError> {
    let (n1, n2, m1, m2) = (first.n, second.n, first.m, second.m);
    let n = n1 + n2;
    for (k, sub) in [first, second].into_iter().enumerate() {
        if sub.flow.dim() != sub.n || sub.jump.dim() != sub.n {
            return Err(ModelError::Dimension(format!(
                "subsystem {} declares n={} but its maps have {} and {} components",
                k + 1,
                sub.n,
                sub.flow.dim(),
                sub.jump.dim()
            )));
        }
        for map in [&sub.flow, &sub.jump] {
            let (a, b) = map.required_dims();
            if a > n || b > sub.m {
                return Err(ModelError::Dimension(format!(
                    "subsystem {} references variables outside N={n}, M={}",
                    k + 1,
                    sub.m
                )));
            }
        }
    }
    let shift_input = |e: &Expr| {
        e.map_vars(&|v| match v {
            Var::Input(i) => Expr::Var(Var::Input(i + m1)),
            other => Expr::Var(other),
        })
    };
    let f1 = first.flow.components.clone();
    let f2: Vec<Expr> = second.flow.components.iter().map(shift_input).collect();
    let g1 = first.jump.components.clone();
    let g2: Vec<Expr> = second.jump.components.iter().map(shift_input).collect();
    let id1: Vec<Expr> = (0..n1).map(Expr::state).collect();
    let id2: Vec<Expr> = (n1..n).map(Expr::state).collect();

    let (only1, only2, both) = timegrid::partition(&first.sequence, &second.sequence, t0, horizon)?;
    let candidates = [
        (only1.with_label("only-1"), [g1.clone(), id2].concat(), JumpRole::OnlyFirst),
        (only2.with_label("only-2"), [id1, g2.clone()].concat(), JumpRole::OnlySecond),
        (both.with_label("both"), [g1, g2].concat(), JumpRole::Both),
    ];
    let mut jumps = Vec::new();
    let mut roles = Vec::new();
    for (sequence, map, role) in candidates {
        if !sequence.realize(t0, horizon)?.is_empty() {
            jumps.push(Jump {
                sequence,
                map: VectorExpr::new(map),
            });
            roles.push(role);
        }
    }
    Ok(Interconnection {
        system: ImpulsiveSystem {
            n,
            m: m1 + m2,
            flow: VectorExpr::new([f1, f2].concat()),
            jumps,
            t0,
        },
        roles,
        n1,
        n2,
        m1,
        m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn example1() -> ImpulsiveSystem {
        let cfg: SystemConfig = serde_json::from_str(
            r#"{"n":1,"m":0,"flow":["-0.2*x1"],"t0":0,
                "jumps":[{"sequence":{"kind":"periodic","start":1,"period":2},"map":["2*x1"]},
                         {"sequence":{"kind":"periodic","start":2,"period":2},"map":["0.6*x1"]}]}"#,
        )
        .unwrap();
        ImpulsiveSystem::from_config(&cfg).unwrap()
    }

    fn sub(n: usize, flow: &[&str], jump: &[&str], seq: ImpulseSequence, total: usize) -> Subsystem {
        let cfg = SubsystemConfig {
            n,
            m: 0,
            flow: flow.iter().map(|s| s.to_string()).collect(),
            jump: jump.iter().map(|s| s.to_string()).collect(),
            sequence: seq,
        };
        Subsystem::from_config(&cfg, total).unwrap()
    }

    #[test]
    fn example1_validates() {
        assert!(example1().validate(30.0).is_empty());
    }

    #[test]
    fn config_round_trip() {
        let sys = example1();
        let again = ImpulsiveSystem::from_config(&sys.to_config()).unwrap();
        assert_eq!(sys, again);
    }

    #[test]
    fn shared_impulse_time_is_a_violation() {
        let mut sys = example1();
        sys.jumps[1].sequence = ImpulseSequence::explicit(vec![3.0]).unwrap();
        let v = sys.validate(10.0);
        assert_eq!(v, vec![Violation::NotDisjoint { time: 3.0 }]);
        assert_eq!(v[0].to_string(), "sequences not disjoint at t=3");
    }

    #[test]
    fn jump_dimension_violation() {
        let mut sys = example1();
        sys.jumps[0].map = VectorExpr::parse(&["x1", "x1"], Scope::new(1, 0)).unwrap();
        assert!(matches!(
            sys.validate(10.0).as_slice(),
            [Violation::JumpDimension { jump: 0, expected: 1, found: 2 }]
        ));
    }

    #[test]
    fn unevaluable_map_is_reported() {
        let mut sys = example1();
        sys.flow = VectorExpr::parse(&["ln(x1)"], Scope::new(1, 0)).unwrap();
        assert!(matches!(sys.validate(10.0).as_slice(), [Violation::NotEvaluable { .. }]));
    }

    #[test]
    fn parse_error_names_the_map() {
        let mut cfg = example1().to_config();
        cfg.jumps[1].map = vec!["0.6*".into()];
        let err = ImpulsiveSystem::from_config(&cfg).unwrap_err();
        assert!(err.to_string().contains("jump map 2"), "{err}");
    }

    #[test]
    fn input_left_limits() {
        let u = InputSignal::from_config(
            &InputConfig::Piecewise {
                breakpoints: vec![1.0, 2.0],
                values: vec![vec![0.0], vec![5.0], vec![-1.0]],
            },
            1,
        )
        .unwrap();
        assert_eq!(u.value(1.0).unwrap(), vec![5.0]);
        assert_eq!(u.left_limit(1.0).unwrap(), vec![0.0]);
        assert_eq!(u.left_limit(2.0).unwrap(), vec![5.0]);
        assert_eq!(u.sup_norm(0.0, 0.5).unwrap(), 0.0);
        assert_eq!(u.sup_norm(0.0, 1.0).unwrap(), 5.0);
        assert_eq!(u.sup_norm(2.0, 3.0).unwrap(), 1.0);

        let e = InputSignal::from_config(&InputConfig::Expression { components: vec!["sin(t)".into()] }, 1).unwrap();
        assert_eq!(e.left_limit(0.0).unwrap(), vec![0.0]);
        assert!(InputSignal::from_config(&InputConfig::Constant { value: vec![1.0, 2.0] }, 1).is_err());
    }

    fn example2_pair() -> (Subsystem, Subsystem) {
        let odd = ImpulseSequence::periodic(1.0, 2.0).unwrap();
        let even = ImpulseSequence::periodic(2.0, 2.0).unwrap();
        (
            sub(1, &["-1.1*x1*(1 + exp(1.1*abs(x1))) + abs(x2)*exp(abs(x2))"], &["3*x1"], odd, 2),
            sub(1, &["-x2*(1 + exp(abs(x2))) + abs(x1)*exp(abs(x1))"], &["2*x2"], even, 2),
        )
    }

    #[test]
    fn interconnect_disjoint_sequences() {
        let (a, b) = example2_pair();
        let ic = interconnect(&a, &b, 0.0, 20.0).unwrap();
        assert_eq!(ic.roles, vec![JumpRole::OnlyFirst, JumpRole::OnlySecond]);
        assert_eq!(ic.system.n, 2);
        assert_eq!(ic.system.jumps[0].map.eval(&[1.0, 1.0], &[]).unwrap(), vec![3.0, 1.0]);
        assert_eq!(ic.system.jumps[1].map.eval(&[1.0, 1.0], &[]).unwrap(), vec![1.0, 2.0]);
        assert!(ic.system.validate(20.0).is_empty());
    }

    #[test]
    fn interconnect_degenerate_partitions() {
        let (a, mut b) = example2_pair();
        b.sequence = ImpulseSequence::empty();
        let ic = interconnect(&a, &b, 0.0, 20.0).unwrap();
        assert_eq!(ic.roles, vec![JumpRole::OnlyFirst]);

        let (a, mut b) = example2_pair();
        b.sequence = a.sequence.clone();
        let ic = interconnect(&a, &b, 0.0, 20.0).unwrap();
        assert_eq!(ic.roles, vec![JumpRole::Both]);
        assert_eq!(ic.system.jumps[0].map.eval(&[1.0, 1.0], &[]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn interconnect_shifts_second_input() {
        let cfg1 = SubsystemConfig {
            n: 1,
            m: 1,
            flow: vec!["-x1 + u1".into()],
            jump: vec!["x1 + u1".into()],
            sequence: ImpulseSequence::periodic(1.0, 1.0).unwrap(),
        };
        let mut cfg2 = cfg1.clone();
        cfg2.flow = vec!["-x2 + u1".into()];
        cfg2.jump = vec!["x2 - u1".into()];
        let (a, b) = Subsystem::pair_from_config(&cfg1, &cfg2).unwrap();
        let ic = interconnect(&a, &b, 0.0, 3.0).unwrap();
        assert_eq!(ic.system.m, 2);
        assert_eq!(ic.system.flow.eval(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(ic.system.jumps[0].map.eval(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), vec![1.0, -2.0]);
    }

    #[test]
    fn interconnect_dimension_mismatch() {
        let (mut a, b) = example2_pair();
        a.n = 2;
        assert!(matches!(interconnect(&a, &b, 0.0, 5.0), Err(ModelError::Dimension(_))));
    }

    proptest! {
        #[test]
        fn interconnect_preserves_counts(
            ta in prop::collection::btree_set(1u32..60, 0..15),
            tb in prop::collection::btree_set(1u32..60, 0..15),
            s in 0.0f64..30.0,
            len in 0.0f64..30.0,
        ) {
            let (mut a, mut b) = example2_pair();
            a.sequence = ImpulseSequence::explicit(ta.iter().map(|t| *t as f64 * 0.5).collect()).unwrap();
            b.sequence = ImpulseSequence::explicit(tb.iter().map(|t| *t as f64 * 0.5).collect()).unwrap();
            let ic = interconnect(&a, &b, 0.0, 30.0).unwrap();
            let t = s + len;
            let composed: usize = ic.system.jumps.iter().map(|j| j.sequence.count(s, t).unwrap()).sum();
            let union: std::collections::BTreeSet<u32> = ta.union(&tb).copied()
                .filter(|k| (*k as f64 * 0.5) > s && (*k as f64 * 0.5) <= t.min(30.0)).collect();
            prop_assert_eq!(composed, union.len());
        }
    }
}
