//! Exact evaluation of the dwell-time condition
//! `sum_i (-d_i) N_i(t, s) - (c - lambda)(t - s) <= mu` for `t0 <= s <= t <= T`.
//!
//! The left side is `G(t) - G(s)` for the right-continuous cumulative
//! `G(t) = sum_{events <= t} (-d_i) - (c - lambda)(t - t0)`. `G` is piecewise
//! linear between events, so its supremum is reached (or approached) at
//! `t0`, `T`, or one-sided limits at event times. A single scan over those
//! candidates with a running minimum gives the exact value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::timegrid::{ImpulseSequence, SequenceFamily, SequenceKind, TimeGridError, TIME_TOL};

/// Budget values within this distance of zero classify as critical.
const CRITICAL_TOL: f64 = 1e-12;
const LAMBDA_RESOLUTION: f64 = 1e-6;
const SAMPLING_BUDGET: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DwellError {
    #[error("empty horizon: T={horizon} < t0={t0}")]
    EmptyHorizon { t0: f64, horizon: f64 },
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("mu must be non-negative, got {0}")]
    NegativeMu(f64),
    #[error("{found} jump coefficients given for {expected} sequences")]
    CoefficientCount { expected: usize, found: usize },
    #[error("non-finite value in dwell-time problem")]
    NonFinite,
    #[error("event times must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("event at t={0} lies outside (t0, T]")]
    OutOfHorizon(f64),
    #[error(transparent)]
    Sequence(#[from] TimeGridError),
    #[error("intensity must be positive, got {0}")]
    BadIntensity(f64),
    #[error("no admissible family after {attempts} draws; try a lower intensity")]
    SamplingBudget { attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    /// The coefficient `-d_i` of the sequence the event belongs to.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellTimeProblem {
    pub events: Vec<Event>,
    pub c: f64,
    pub lambda: f64,
    pub t0: f64,
    pub horizon: f64,
    /// Sum of weights over one common period and its length, when every
    /// sequence repeats.
    pub period: Option<PeriodInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodInfo {
    pub length: f64,
    pub weight_per_period: f64,
}

fn sequence_period(seq: &ImpulseSequence, t0: f64, horizon: f64) -> Result<Option<Option<f64>>, TimeGridError> {
    // Some(None): no events at all, neutral for the common period
    match &seq.kind {
        SequenceKind::Periodic { period, .. } => Ok(Some(Some(*period))),
        SequenceKind::Explicit { .. } => {
            let times = seq.realize(t0, horizon)?;
            match times.len() {
                0 => Ok(Some(None)),
                1 => Ok(None),
                _ => {
                    let step = times[1] - times[0];
                    let regular = times
                        .windows(2)
                        .all(|w| ((w[1] - w[0]) - step).abs() <= TIME_TOL * (1.0 + w[1].abs()));
                    Ok(regular.then_some(Some(step)))
                }
            }
        }
    }
}

/// Smallest common multiple of the periods, searched over the first 1000
/// multiples of the largest one.
fn common_period(periods: &[f64]) -> Option<f64> {
    let base = periods.iter().cloned().fold(0.0, f64::max);
    if base <= 0.0 {
        return None;
    }
    (1..=1000).map(|k| base * k as f64).find(|cand| {
        periods.iter().all(|p| {
            let q = cand / p;
            (q - q.round()).abs() <= 1e-9 * q.max(1.0)
        })
    })
}

impl DwellTimeProblem {
    /// Builds the problem from a family of sequences and one `d_i` per sequence.
    pub fn from_family(
        family: &SequenceFamily,
        d: &[f64],
        c: f64,
        lambda: f64,
        t0: f64,
        horizon: f64,
    ) -> Result<Self, DwellError> {
        if d.len() != family.len() {
            return Err(DwellError::CoefficientCount {
                expected: family.len(),
                found: d.len(),
            });
        }
        check_scalars(c, lambda, t0, horizon)?;
        if d.iter().any(|v| !v.is_finite()) {
            return Err(DwellError::NonFinite);
        }
        let events = family
            .merge(t0, horizon)?
            .into_iter()
            .map(|(time, i)| Event { time, weight: -d[i] })
            .collect();

        let per_seq = family
            .sequences
            .iter()
            .map(|seq| sequence_period(seq, t0, horizon))
            .collect::<Result<Vec<_>, _>>()?;
        let period = if per_seq.iter().any(Option::is_none) {
            None
        } else {
            // (period, weight) of every sequence that has events
            let weighted: Vec<(f64, f64)> = per_seq
                .iter()
                .zip(d)
                .filter_map(|(p, di)| p.flatten().map(|p| (p, -di)))
                .collect();
            if weighted.is_empty() {
                Some(PeriodInfo {
                    length: 1.0,
                    weight_per_period: 0.0,
                })
            } else {
                let periods: Vec<f64> = weighted.iter().map(|w| w.0).collect();
                common_period(&periods).map(|length| PeriodInfo {
                    length,
                    weight_per_period: weighted.iter().map(|(p, w)| (length / p).round() * w).sum(),
                })
            }
        };
        Ok(DwellTimeProblem {
            events,
            c,
            lambda,
            t0,
            horizon,
            period,
        })
    }

    /// Per-impulse form: every event carries its own coefficient `-d`.
    /// `events` holds `(time, d)` pairs.
    pub fn per_event(events: &[(f64, f64)], c: f64, lambda: f64, t0: f64, horizon: f64) -> Result<Self, DwellError> {
        check_scalars(c, lambda, t0, horizon)?;
        let mut out = Vec::with_capacity(events.len());
        for (k, &(time, d)) in events.iter().enumerate() {
            if !time.is_finite() || !d.is_finite() {
                return Err(DwellError::NonFinite);
            }
            if time <= t0 + TIME_TOL || time > horizon + TIME_TOL {
                return Err(DwellError::OutOfHorizon(time));
            }
            if k > 0 && time <= events[k - 1].0 {
                return Err(DwellError::NotIncreasing(k));
            }
            out.push(Event { time, weight: -d });
        }
        let period = out.is_empty().then_some(PeriodInfo {
            length: 1.0,
            weight_per_period: 0.0,
        });
        Ok(DwellTimeProblem {
            events: out,
            c,
            lambda,
            t0,
            horizon,
            period,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        DwellTimeProblem {
            lambda,
            ..self.clone()
        }
    }

    fn drift(&self) -> f64 {
        self.c - self.lambda
    }

    /// Left side of the condition on `(s, t]`. A left-limit flag moves the
    /// endpoint to just before the event at that time.
    pub fn evaluate(&self, s: f64, s_left: bool, t: f64, t_left: bool) -> f64 {
        let inside = |e: &Event| {
            let after_s = if s_left { e.time >= s } else { e.time > s };
            let upto_t = if t_left { e.time < t } else { e.time <= t };
            after_s && upto_t
        };
        let jumps: f64 = self.events.iter().filter(|e| inside(e)).map(|e| e.weight).sum();
        jumps - self.drift() * (t - s)
    }
}

fn check_scalars(c: f64, lambda: f64, t0: f64, horizon: f64) -> Result<(), DwellError> {
    if !(c.is_finite() && lambda.is_finite() && t0.is_finite() && horizon.is_finite()) {
        return Err(DwellError::NonFinite);
    }
    if horizon < t0 {
        return Err(DwellError::EmptyHorizon { t0, horizon });
    }
    if lambda <= 0.0 {
        return Err(DwellError::NonPositiveLambda(lambda));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub s: f64,
    pub t: f64,
    /// `s` is approached from the left, so an event at `s` is inside the interval.
    pub s_left_limit: bool,
    /// `t` is approached from the left, so an event at `t` is outside the interval.
    pub t_left_limit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Contractive,
    Critical,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellTimeVerdict {
    pub mu_star: f64,
    pub witness: Witness,
    pub per_period_budget: Option<f64>,
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Supremum of the left side over `t0 <= s <= t <= T`.
pub fn minimal_mu(prob: &DwellTimeProblem) -> Result<DwellTimeVerdict, DwellError> {
    check_scalars(prob.c, prob.lambda, prob.t0, prob.horizon)?;
    let drift = prob.drift();

    // (time, left limit?, G)
    let mut candidates = Vec::with_capacity(2 * prob.events.len() + 2);
    candidates.push((prob.t0, false, 0.0));
    let mut g = 0.0;
    let mut last = prob.t0;
    for e in &prob.events {
        g -= drift * (e.time - last);
        candidates.push((e.time, true, g));
        g += e.weight;
        candidates.push((e.time, false, g));
        last = e.time;
    }
    if prob.horizon > last {
        g -= drift * (prob.horizon - last);
        candidates.push((prob.horizon, false, g));
    }

    let mut best = 0.0;
    let mut witness = Witness {
        s: prob.t0,
        t: prob.t0,
        s_left_limit: false,
        t_left_limit: false,
    };
    let mut low = candidates[0];
    for &cand in &candidates {
        if cand.2 < low.2 {
            low = cand;
        }
        if cand.2 - low.2 > best {
            best = cand.2 - low.2;
            witness = Witness {
                s: low.0,
                t: cand.0,
                s_left_limit: low.1,
                t_left_limit: cand.1,
            };
        }
    }
    // Re-evaluate on the witness so the reported value does not carry
    // rounding accumulated along the scan.
    let mu_star = prob
        .evaluate(witness.s, witness.s_left_limit, witness.t, witness.t_left_limit)
        .max(0.0);

    let per_period_budget = prob.period.map(|p| p.weight_per_period - drift * p.length);
    let classification = per_period_budget.map(|b| {
        if b.abs() <= CRITICAL_TOL {
            Classification::Critical
        } else if b > 0.0 {
            Classification::Divergent
        } else {
            Classification::Contractive
        }
    });
    let warning = (prob.lambda >= prob.c)
        .then(|| format!("lambda={} >= c={}: the condition no longer implies ISS decay", prob.lambda, prob.c));
    Ok(DwellTimeVerdict {
        mu_star,
        witness,
        per_period_budget,
        classification,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellCheck {
    pub passed: bool,
    pub mu: f64,
    pub verdict: DwellTimeVerdict,
}

pub fn check(prob: &DwellTimeProblem, mu: f64) -> Result<DwellCheck, DwellError> {
    if !(mu >= 0.0) {
        return Err(DwellError::NegativeMu(mu));
    }
    let verdict = minimal_mu(prob)?;
    Ok(DwellCheck {
        passed: verdict.mu_star <= mu,
        mu,
        verdict,
    })
}

/// Largest `lambda` in `(0, c)` for which the condition holds with `mu`,
/// found by bisection to a resolution of `1e-6`. The `lambda` stored in
/// `prob` is ignored.
pub fn feasible_lambda(prob: &DwellTimeProblem, mu: f64) -> Result<Option<f64>, DwellError> {
    if !(mu >= 0.0) {
        return Err(DwellError::NegativeMu(mu));
    }
    let passes = |lambda: f64| -> Result<bool, DwellError> { Ok(minimal_mu(&prob.with_lambda(lambda))?.mu_star <= mu) };
    let top = prob.c - LAMBDA_RESOLUTION;
    let floor = f64::MIN_POSITIVE;
    if top <= floor || !passes(floor)? {
        return Ok(None);
    }
    if passes(top)? {
        return Ok(Some(top));
    }
    let (mut lo, mut hi) = (floor, top);
    while hi - lo > LAMBDA_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Parameters of the class `S[mu, lambda]` to sample from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub mu: f64,
    pub lambda: f64,
    pub c: f64,
    pub d: Vec<f64>,
    pub t0: f64,
    pub horizon: f64,
}

/// Draws impulse families from a Poisson process of the given intensity with
/// uniformly random sequence labels and keeps the first one satisfying the
/// dwell-time condition. Deterministic for a fixed seed.
pub fn sample_in_class(seed: u64, class: &ClassSpec, intensity: f64) -> Result<SequenceFamily, DwellError> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(DwellError::BadIntensity(intensity));
    }
    if class.d.is_empty() {
        return Err(DwellError::CoefficientCount { expected: 1, found: 0 });
    }
    if !(class.mu >= 0.0) {
        return Err(DwellError::NegativeMu(class.mu));
    }
    check_scalars(class.c, class.lambda, class.t0, class.horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = class.d.len();
    for _ in 0..SAMPLING_BUDGET {
        let mut times = vec![Vec::new(); p];
        let mut t = class.t0;
        loop {
            let u: f64 = rng.gen();
            t += -(1.0 - u).ln() / intensity;
            if t > class.horizon {
                break;
            }
            times[rng.gen_range(0..p)].push(t);
        }
        let family = SequenceFamily::new(
            times
                .into_iter()
                .map(ImpulseSequence::explicit)
                .collect::<Result<Vec<_>, _>>()?,
        );
        let prob = match DwellTimeProblem::from_family(&family, &class.d, class.c, class.lambda, class.t0, class.horizon) {
            Ok(prob) => prob,
            Err(DwellError::Sequence(TimeGridError::NotDisjoint { .. })) => continue,
            Err(e) => return Err(e),
        };
        if check(&prob, class.mu)?.passed {
            return Ok(family);
        }
    }
    Err(DwellError::SamplingBudget {
        attempts: SAMPLING_BUDGET,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn odd_even() -> SequenceFamily {
        SequenceFamily::new(vec![
            ImpulseSequence::periodic(1.0, 2.0).unwrap(),
            ImpulseSequence::periodic(2.0, 2.0).unwrap(),
        ])
    }

    fn ex1(lambda: f64) -> DwellTimeProblem {
        let d = [-(2f64.ln()), -(0.6f64.ln())];
        DwellTimeProblem::from_family(&odd_even(), &d, 0.2, lambda, 0.0, 100.0).unwrap()
    }

    fn ex2(lambda: f64) -> DwellTimeProblem {
        let d = [-(3f64.ln()), -(2f64.ln())];
        DwellTimeProblem::from_family(&odd_even(), &d, 1.0, lambda, 0.0, 100.0).unwrap()
    }

    /// Direct summation over every pair of one-sided candidate endpoints.
    fn brute(prob: &DwellTimeProblem) -> f64 {
        let mut pts = vec![(prob.t0, false), (prob.horizon, false), (prob.horizon, true)];
        for e in &prob.events {
            pts.push((e.time, true));
            pts.push((e.time, false));
        }
        let mut best = 0.0f64;
        for &(s, sl) in &pts {
            for &(t, tl) in &pts {
                let order = s < t || (s == t && (sl || !tl));
                if !order || s < prob.t0 {
                    continue;
                }
                let mut sum = 0.0;
                for e in &prob.events {
                    let lo = if sl { e.time >= s } else { e.time > s };
                    let hi = if tl { e.time < t } else { e.time <= t };
                    if lo && hi {
                        sum += e.weight;
                    }
                }
                best = best.max(sum - (prob.c - prob.lambda) * (t - s));
            }
        }
        best
    }

    #[test]
    fn example1_revisited() {
        let v = minimal_mu(&ex1(0.1)).unwrap();
        assert!((v.mu_star - 2f64.ln()).abs() < 1e-12);
        assert_eq!(v.witness.t, 1.0);
        assert!(v.witness.s_left_limit && v.witness.s == 1.0);
        let budget = 2f64.ln() + 0.6f64.ln() - 0.2;
        assert!((v.per_period_budget.unwrap() - budget).abs() < 1e-12);
        assert_eq!(v.classification, Some(Classification::Contractive));
        assert!(check(&ex1(0.1), 2f64.ln()).unwrap().passed);
    }

    #[test]
    fn example2() {
        let v = minimal_mu(&ex2(0.05)).unwrap();
        assert!((v.mu_star - 3f64.ln()).abs() < 1e-12);
        let lam = feasible_lambda(&ex2(0.05), 3f64.ln()).unwrap().unwrap();
        assert!((lam - (2.0 - 6f64.ln()) / 2.0).abs() < 1e-4, "{lam}");
    }

    #[test]
    fn majorant_diverges() {
        let d = [-(3f64.ln()), -(3f64.ln())];
        let prob = DwellTimeProblem::from_family(&odd_even(), &d, 1.0, 0.05, 0.0, 100.0).unwrap();
        let v = minimal_mu(&prob).unwrap();
        assert_eq!(v.classification, Some(Classification::Divergent));
        assert!(!check(&prob, 10.0).unwrap().passed);
        assert!(v.witness.t - v.witness.s > 90.0);
        assert_eq!(feasible_lambda(&prob, 10.0).unwrap(), None);
    }

    #[test]
    fn no_events() {
        let prob = DwellTimeProblem::per_event(&[], 1.0, 0.5, 0.0, 10.0).unwrap();
        let v = minimal_mu(&prob).unwrap();
        assert_eq!(v.mu_star, 0.0);
        assert_eq!(v.witness.s, v.witness.t);
        assert_eq!(v.classification, Some(Classification::Contractive));
        assert_eq!(feasible_lambda(&prob, 0.0).unwrap(), Some(1.0 - 1e-6));
    }

    #[test]
    fn zero_mu_fails_on_bad_event() {
        let prob = DwellTimeProblem::per_event(&[(3.0, -0.5)], 1.0, 0.5, 0.0, 10.0).unwrap();
        let c = check(&prob, 0.0).unwrap();
        assert!(!c.passed);
        assert_eq!(c.verdict.witness.t, 3.0);
        assert_eq!(c.verdict.mu_star, 0.5);
    }

    #[test]
    fn left_limit_of_t_matters_with_positive_slope() {
        // drift c - lambda < 0 grows G; a good jump at 5 cuts it
        let prob = DwellTimeProblem::per_event(&[(5.0, 10.0)], 0.1, 0.6, 0.0, 6.0).unwrap();
        let v = minimal_mu(&prob).unwrap();
        assert!((v.mu_star - 2.5).abs() < 1e-12);
        assert!(v.witness.t_left_limit && v.witness.t == 5.0);
        assert!((brute(&prob) - v.mu_star).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            DwellTimeProblem::per_event(&[], 1.0, 0.1, 5.0, 4.0),
            Err(DwellError::EmptyHorizon { .. })
        ));
        assert!(matches!(
            DwellTimeProblem::per_event(&[], 1.0, 0.0, 0.0, 4.0),
            Err(DwellError::NonPositiveLambda(_))
        ));
        assert!(matches!(
            DwellTimeProblem::per_event(&[(2.0, 1.0), (1.0, 1.0)], 1.0, 0.1, 0.0, 4.0),
            Err(DwellError::NotIncreasing(1))
        ));
        assert!(matches!(
            DwellTimeProblem::from_family(&odd_even(), &[1.0], 1.0, 0.1, 0.0, 4.0),
            Err(DwellError::CoefficientCount { .. })
        ));
    }

    #[test]
    fn warns_when_lambda_reaches_c() {
        let v = minimal_mu(&ex1(0.3)).unwrap();
        assert!(v.warning.is_some());
        assert!(minimal_mu(&ex1(0.1)).unwrap().warning.is_none());
    }

    #[test]
    fn partitioned_explicit_sequences_keep_classification() {
        let fam = SequenceFamily::new(vec![
            ImpulseSequence::explicit((0..50).map(|k| 2.0 * k as f64 + 1.0).collect()).unwrap(),
            ImpulseSequence::explicit((1..=50).map(|k| 2.0 * k as f64).collect()).unwrap(),
            ImpulseSequence::empty(),
        ]);
        let d = [-(3f64.ln()), -(2f64.ln()), -(3f64.ln())];
        let prob = DwellTimeProblem::from_family(&fam, &d, 1.0, 0.05, 0.0, 100.0).unwrap();
        let v = minimal_mu(&prob).unwrap();
        assert_eq!(v.classification, Some(Classification::Contractive));
        assert!((v.mu_star - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sampling() {
        let class = ClassSpec {
            mu: 2f64.ln(),
            lambda: 0.1,
            c: 0.2,
            d: vec![-(2f64.ln()), -(0.6f64.ln())],
            t0: 0.0,
            horizon: 20.0,
        };
        let fam = sample_in_class(7, &class, 0.5).unwrap();
        assert_eq!(fam, sample_in_class(7, &class, 0.5).unwrap());
        let prob = DwellTimeProblem::from_family(&fam, &class.d, class.c, class.lambda, 0.0, 20.0).unwrap();
        assert!(check(&prob, class.mu).unwrap().passed);

        let impossible = ClassSpec {
            mu: 0.0,
            d: vec![-1.0],
            ..class.clone()
        };
        assert!(matches!(
            sample_in_class(1, &impossible, 50.0),
            Err(DwellError::SamplingBudget { attempts: 1000 })
        ));
        let good = ClassSpec {
            mu: 0.0,
            d: vec![1.0, 0.5],
            ..class
        };
        assert!(sample_in_class(3, &good, 5.0).is_ok());
    }

    #[test]
    fn report_shape() {
        let v = serde_json::to_value(minimal_mu(&ex1(0.1)).unwrap()).unwrap();
        assert!(v["mu_star"].is_number());
        assert!(v["witness"]["s"].is_number() && v["witness"]["t"].is_number());
        assert_eq!(v["classification"], "contractive");
        assert!(v["per_period_budget"].is_number());
    }

    fn arb_problem() -> impl Strategy<Value = DwellTimeProblem> {
        (
            prop::collection::vec((0.01f64..1.0, -2.0f64..2.0), 0..=20),
            -1.0f64..1.0,
            0.05f64..1.0,
            -5.0f64..5.0,
            0.0f64..2.0,
        )
            .prop_map(|(gaps, drift, lambda, t0, tail)| {
                let mut t = t0;
                let mut evs = Vec::new();
                for (g, d) in gaps {
                    t += g;
                    evs.push((t, d));
                }
                DwellTimeProblem::per_event(&evs, drift + lambda, lambda, t0, t + tail).unwrap()
            })
    }

    proptest! {
        #[test]
        fn scan_matches_brute_force(prob in arb_problem()) {
            let v = minimal_mu(&prob).unwrap();
            prop_assert!((v.mu_star - brute(&prob)).abs() < 1e-12);
            prop_assert!(v.mu_star >= 0.0);
            let re = prob.evaluate(v.witness.s, v.witness.s_left_limit, v.witness.t, v.witness.t_left_limit);
            prop_assert!((re.max(0.0) - v.mu_star).abs() == 0.0);
            prop_assert!(check(&prob, v.mu_star).unwrap().passed);
            if v.mu_star > 1e-9 {
                prop_assert!(!check(&prob, v.mu_star - 1e-9).unwrap().passed);
            }
        }

        #[test]
        fn shift_invariant(prob in arb_problem(), delta in -50.0f64..50.0) {
            let evs: Vec<(f64, f64)> = prob.events.iter().map(|e| (e.time + delta, -e.weight)).collect();
            let shifted = DwellTimeProblem::per_event(&evs, prob.c, prob.lambda, prob.t0 + delta, prob.horizon + delta).unwrap();
            prop_assert!((minimal_mu(&prob).unwrap().mu_star - minimal_mu(&shifted).unwrap().mu_star).abs() < 1e-9);
        }

        #[test]
        fn monotone(prob in arb_problem(), k in 0usize..20, bump in 0.0f64..1.0, dl in 0.0f64..0.5) {
            let base = minimal_mu(&prob).unwrap().mu_star;
            let mut heavier = prob.clone();
            if !heavier.events.is_empty() {
                let k = k % heavier.events.len();
                heavier.events[k].weight += bump;
            }
            prop_assert!(minimal_mu(&heavier).unwrap().mu_star >= base - 1e-12);
            let relaxed = prob.with_lambda(prob.lambda + dl);
            prop_assert!(minimal_mu(&relaxed).unwrap().mu_star >= base - 1e-12);
        }

        #[test]
        fn per_event_form_agrees(starts in prop::collection::vec(0.1f64..3.0, 1..4), d in prop::collection::vec(-2.0f64..2.0, 4)) {
            let fam = SequenceFamily::new(
                starts.iter().enumerate()
                    .map(|(i, s)| ImpulseSequence::periodic(s + 0.01 * i as f64 + 0.003, 1.7 + 0.31 * i as f64).unwrap())
                    .collect(),
            );
            let d = &d[..fam.len()];
            let Ok(prob) = DwellTimeProblem::from_family(&fam, d, 0.5, 0.1, 0.0, 30.0) else { return Ok(()) };
            let merged = fam.merge(0.0, 30.0).unwrap();
            let flat: Vec<(f64, f64)> = merged.iter().map(|&(t, i)| (t, d[i])).collect();
            let flat = DwellTimeProblem::per_event(&flat, 0.5, 0.1, 0.0, 30.0).unwrap();
            prop_assert_eq!(minimal_mu(&prob).unwrap().mu_star, minimal_mu(&flat).unwrap().mu_star);
        }
    }
}
