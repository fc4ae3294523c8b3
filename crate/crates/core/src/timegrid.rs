//! Impulse time sequences.
//!
//! A sequence is either periodic (`start + k * period`, `k >= 0`) or an explicit
//! list of times. Sequences are only ever looked at through a finite horizon
//! `(t0, T]`, and every realized time lies strictly after `t0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for deciding that two impulse times coincide.
pub const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeGridError {
    #[error("impulse period must be positive and finite, got {0}")]
    NonPositivePeriod(f64),
    #[error("explicit impulse times must be finite and strictly increasing (violated at index {index})")]
    NotIncreasing { index: usize },
    #[error("interval end {t} precedes interval start {s}")]
    ReversedInterval { s: f64, t: f64 },
    #[error("sequences not disjoint at t={time} (sequences {first} and {second})")]
    NotDisjoint {
        time: f64,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceKind {
    Periodic { start: f64, period: f64 },
    Explicit { times: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseSequence {
    #[serde(flatten)]
    pub kind: SequenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ImpulseSequence {
    pub fn periodic(start: f64, period: f64) -> Result<Self, TimeGridError> {
        let seq = ImpulseSequence {
            kind: SequenceKind::Periodic { start, period },
            label: None,
        };
        seq.check()?;
        Ok(seq)
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self, TimeGridError> {
        let seq = ImpulseSequence {
            kind: SequenceKind::Explicit { times },
            label: None,
        };
        seq.check()?;
        Ok(seq)
    }

    pub fn empty() -> Self {
        ImpulseSequence {
            kind: SequenceKind::Explicit { times: Vec::new() },
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Checks the construction invariants. Deserialized sequences have not
    /// been through the constructors, so `realize` calls this too.
    pub fn check(&self) -> Result<(), TimeGridError> {
        match &self.kind {
            SequenceKind::Periodic { start, period } => {
                if !(period.is_finite() && *period > 0.0) || !start.is_finite() {
                    return Err(TimeGridError::NonPositivePeriod(*period));
                }
            }
            SequenceKind::Explicit { times } => {
                for (i, t) in times.iter().enumerate() {
                    if !t.is_finite() || (i > 0 && *t <= times[i - 1]) {
                        return Err(TimeGridError::NotIncreasing { index: i });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, SequenceKind::Periodic { .. })
    }

    /// All impulse times in `(t0, T]`, strictly increasing.
    ///
    /// Both interval ends are compared with a `TIME_TOL` shift so that
    /// periodic times carrying generation round-off land on the intended side.
    pub fn realize(&self, t0: f64, horizon: f64) -> Result<Vec<f64>, TimeGridError> {
        self.check()?;
        if horizon < t0 {
            return Err(TimeGridError::ReversedInterval { s: t0, t: horizon });
        }
        let inside = |t: f64| t > t0 + TIME_TOL && t <= horizon + TIME_TOL;
        match &self.kind {
            SequenceKind::Periodic { start, period } => {
                let first = if *start > t0 {
                    0.0
                } else {
                    ((t0 - start) / period).floor().max(0.0)
                };
                let mut k = first;
                let mut out = Vec::new();
                loop {
                    let t = start + k * period;
                    if t > horizon + TIME_TOL {
                        break;
                    }
                    if inside(t) {
                        out.push(t);
                    }
                    k += 1.0;
                }
                Ok(out)
            }
            SequenceKind::Explicit { times } => {
                Ok(times.iter().copied().filter(|t| inside(*t)).collect())
            }
        }
    }

    /// Number of impulse times in the semi-open interval `(s, t]`.
    pub fn count(&self, s: f64, t: f64) -> Result<usize, TimeGridError> {
        if t < s {
            return Err(TimeGridError::ReversedInterval { s, t });
        }
        Ok(self.realize(s, t)?.len())
    }
}

/// Splits two sequences over `(t0, T]` into the times owned only by the
/// first, only by the second, and by both.
pub fn partition(
    a: &ImpulseSequence,
    b: &ImpulseSequence,
    t0: f64,
    horizon: f64,
) -> Result<(ImpulseSequence, ImpulseSequence, ImpulseSequence), TimeGridError> {
    let ta = a.realize(t0, horizon)?;
    let tb = b.realize(t0, horizon)?;
    let (mut only_a, mut only_b, mut both) = (Vec::new(), Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < ta.len() && j < tb.len() {
        if (ta[i] - tb[j]).abs() <= TIME_TOL {
            both.push(ta[i]);
            i += 1;
            j += 1;
        } else if ta[i] < tb[j] {
            only_a.push(ta[i]);
            i += 1;
        } else {
            only_b.push(tb[j]);
            j += 1;
        }
    }
    only_a.extend_from_slice(&ta[i..]);
    only_b.extend_from_slice(&tb[j..]);
    let wrap = |times| ImpulseSequence {
        kind: SequenceKind::Explicit { times },
        label: None,
    };
    Ok((wrap(only_a), wrap(only_b), wrap(both)))
}

/// An ordered list of impulse sequences, one per jump map.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SequenceFamily {
    pub sequences: Vec<ImpulseSequence>,
}

impl SequenceFamily {
    pub fn new(sequences: Vec<ImpulseSequence>) -> Self {
        SequenceFamily { sequences }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Merged event timeline on `(t0, T]`, each time tagged with the
    /// (zero-based) index of the sequence that owns it.
    pub fn merge(&self, t0: f64, horizon: f64) -> Result<Vec<(f64, usize)>, TimeGridError> {
        let mut events = Vec::new();
        for (idx, seq) in self.sequences.iter().enumerate() {
            events.extend(seq.realize(t0, horizon)?.into_iter().map(|t| (t, idx)));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for w in events.windows(2) {
            if w[1].0 - w[0].0 <= TIME_TOL {
                return Err(TimeGridError::NotDisjoint {
                    time: w[0].0,
                    first: w[0].1,
                    second: w[1].1,
                });
            }
        }
        Ok(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn odd() -> ImpulseSequence {
        ImpulseSequence::periodic(1.0, 2.0).unwrap()
    }

    fn even() -> ImpulseSequence {
        ImpulseSequence::periodic(2.0, 2.0).unwrap()
    }

    fn explicit(t: &[f64]) -> ImpulseSequence {
        ImpulseSequence::explicit(t.to_vec()).unwrap()
    }

    fn times(seq: &ImpulseSequence) -> Vec<f64> {
        match &seq.kind {
            SequenceKind::Explicit { times } => times.clone(),
            _ => panic!("expected explicit"),
        }
    }

    #[test]
    fn realize_periodic() {
        assert_eq!(odd().realize(0.0, 6.0).unwrap(), vec![1.0, 3.0, 5.0]);
        assert_eq!(even().realize(0.0, 6.0).unwrap(), vec![2.0, 4.0, 6.0]);
        assert!(ImpulseSequence::empty().realize(0.0, 100.0).unwrap().is_empty());
    }

    #[test]
    fn realize_excludes_initial_time() {
        let seq = ImpulseSequence::periodic(0.0, 1.0).unwrap();
        assert_eq!(seq.realize(0.0, 3.0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(seq.realize(1.5, 3.0).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn realize_periodic_round_off_at_horizon() {
        let seq = ImpulseSequence::periodic(0.1, 0.1).unwrap();
        assert_eq!(seq.realize(0.0, 1.0).unwrap().len(), 10);
    }

    #[test]
    fn bad_period_rejected() {
        assert!(matches!(
            ImpulseSequence::periodic(0.0, 0.0),
            Err(TimeGridError::NonPositivePeriod(_))
        ));
        let raw = ImpulseSequence {
            kind: SequenceKind::Periodic {
                start: 1.0,
                period: -2.0,
            },
            label: None,
        };
        assert!(raw.realize(0.0, 5.0).is_err());
        assert!(ImpulseSequence::explicit(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn count_examples() {
        assert_eq!(odd().count(0.0, 6.0).unwrap(), 3);
        assert_eq!(odd().count(1.0, 1.0).unwrap(), 0);
        assert_eq!(odd().count(0.5, 1.0).unwrap(), 1);
        assert!(odd().count(2.0, 1.0).is_err());
    }

    #[test]
    fn partition_examples() {
        let (a, b, c) = partition(&odd(), &even(), 0.0, 6.0).unwrap();
        assert_eq!(times(&a), vec![1.0, 3.0, 5.0]);
        assert_eq!(times(&b), vec![2.0, 4.0, 6.0]);
        assert!(times(&c).is_empty());

        let (a, b, c) = partition(&explicit(&[1.0, 2.0]), &explicit(&[2.0, 3.0]), 0.0, 10.0).unwrap();
        assert_eq!((times(&a), times(&b), times(&c)), (vec![1.0], vec![3.0], vec![2.0]));

        let (a, b, c) = partition(&ImpulseSequence::empty(), &explicit(&[1.0]), 0.0, 10.0).unwrap();
        assert_eq!((times(&a), times(&b), times(&c)), (vec![], vec![1.0], vec![]));
    }

    #[test]
    fn merge_examples() {
        let fam = SequenceFamily::new(vec![odd(), even()]);
        assert_eq!(
            fam.merge(0.0, 4.0).unwrap(),
            vec![(1.0, 0), (2.0, 1), (3.0, 0), (4.0, 1)]
        );
        let single = SequenceFamily::new(vec![odd()]);
        assert_eq!(single.merge(0.0, 4.0).unwrap(), vec![(1.0, 0), (3.0, 0)]);

        let clash = SequenceFamily::new(vec![odd(), explicit(&[3.0])]);
        match clash.merge(0.0, 10.0) {
            Err(TimeGridError::NotDisjoint { time, .. }) => assert_eq!(time, 3.0),
            other => panic!("expected disjointness error, got {other:?}"),
        }
    }

    #[test]
    fn config_shape() {
        let seq: ImpulseSequence =
            serde_json::from_str(r#"{"kind":"periodic","start":1,"period":2}"#).unwrap();
        assert_eq!(seq, odd());
        let seq: ImpulseSequence =
            serde_json::from_str(r#"{"kind":"explicit","times":[0.5,2]}"#).unwrap();
        assert_eq!(seq, explicit(&[0.5, 2.0]));
        assert_eq!(
            serde_json::to_string(&odd()).unwrap(),
            r#"{"kind":"periodic","start":1.0,"period":2.0}"#
        );
    }

    #[test]
    fn realize_is_idempotent() {
        let r = odd().realize(0.0, 20.0).unwrap();
        let again = ImpulseSequence::explicit(r.clone()).unwrap().realize(0.0, 20.0).unwrap();
        assert_eq!(r, again);
    }

    proptest! {
        #[test]
        fn count_additive_and_monotone(
            start in -3.0f64..3.0,
            period in 0.05f64..3.0,
            a in 0.0f64..20.0,
            b in 0.0f64..20.0,
            c in 0.0f64..20.0,
        ) {
            let seq = ImpulseSequence::periodic(start, period).unwrap();
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            let [s, r, t] = v;
            let whole = seq.count(s, t).unwrap();
            prop_assert_eq!(whole, seq.count(s, r).unwrap() + seq.count(r, t).unwrap());
            prop_assert!(seq.count(s, r).unwrap() <= whole);
            prop_assert!(seq.count(r, t).unwrap() <= whole);
        }
    }
}
