//! Grid verification of exponential ISS-Lyapunov certificates.
//!
//! Every check samples a uniform grid on the box `[-X, X]^n x [-U, U]^m` and
//! evaluates the decay inequalities pointwise. A passing verdict means
//! "grid-verified on the region", nothing stronger. Points closer than the
//! kink radius to a switching surface of `abs`/`sign`/`min`/`max` inside `V`
//! are skipped in the flow condition, where `V` has no gradient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr, ParseError, Scope, Var};
use crate::model::{ImpulsiveSystem, Subsystem};

/// Largest grid the checker agrees to enumerate.
const MAX_GRID_POINTS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("invalid sampling region: {0}")]
    Region(String),
    #[error("cannot parse {what}: {source}")]
    Parse {
        what: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("candidate has {found} jump coefficients, system has {expected} jump maps")]
    CoefficientCount { expected: usize, found: usize },
    #[error("V is not positive definite on the grid (V={value} at x={x:?})")]
    NotPositiveDefinite { x: Vec<f64>, value: f64 },
    #[error("gain is not of class K on sampled points (at r={r})")]
    NotClassK { r: f64 },
    #[error("Lyapunov function of subsystem {which} depends on states outside its block")]
    BlockViolation { which: usize },
    #[error("cannot evaluate certificate: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingRegion {
    pub state_radius: f64,
    #[serde(default)]
    pub input_radius: f64,
    pub points_per_axis: usize,
    /// Defaults to `1e-3 * state_radius`.
    #[serde(default)]
    pub kink_radius: Option<f64>,
    /// Violations count only above `tol * (1 + |V(x)|)`.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-7
}

impl SamplingRegion {
    pub fn new(state_radius: f64, input_radius: f64, points_per_axis: usize) -> Self {
        SamplingRegion {
            state_radius,
            input_radius,
            points_per_axis,
            kink_radius: None,
            tol: default_tol(),
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn kink_radius(&self) -> f64 {
        self.kink_radius.unwrap_or(1e-3 * self.state_radius)
    }

    /// Same region with the default kink radius written out.
    pub fn resolved(&self) -> Self {
        SamplingRegion {
            kink_radius: Some(self.kink_radius()),
            ..*self
        }
    }

    fn check(&self) -> Result<(), CertifyError> {
        let bad = |m: &str| Err(CertifyError::Region(m.to_string()));
        if !(self.state_radius.is_finite() && self.state_radius > 0.0) {
            return bad("state radius must be positive");
        }
        if !(self.input_radius.is_finite() && self.input_radius >= 0.0) {
            return bad("input radius must be non-negative");
        }
        if self.points_per_axis < 3 {
            return bad("need at least 3 grid points per axis");
        }
        let rho = self.kink_radius();
        if !(rho >= 0.0 && rho < self.state_radius) {
            return bad("kink radius must lie in [0, state radius)");
        }
        if !(self.tol > 0.0) {
            return bad("tolerance must be positive");
        }
        Ok(())
    }

    fn axis(radius: f64, k: usize) -> Vec<f64> {
        if radius == 0.0 {
            return vec![0.0];
        }
        (0..k)
            .map(|i| -radius + 2.0 * radius * (i as f64) / ((k - 1) as f64))
            .collect()
    }

    fn grid(&self, n: usize, m: usize) -> Result<Grid, CertifyError> {
        self.check()?;
        let xs = Self::axis(self.state_radius, self.points_per_axis);
        let us = Self::axis(self.input_radius, self.points_per_axis);
        let total = (0..n)
            .map(|_| xs.len())
            .chain((0..m).map(|_| us.len()))
            .try_fold(1usize, |acc, k| acc.checked_mul(k))
            .filter(|t| *t <= MAX_GRID_POINTS)
            .ok_or_else(|| CertifyError::Region("grid too large".into()))?;
        Ok(Grid { xs, us, n, m, total })
    }
}

struct Grid {
    xs: Vec<f64>,
    us: Vec<f64>,
    n: usize,
    m: usize,
    total: usize,
}

impl Grid {
    fn point(&self, mut idx: usize) -> (Vec<f64>, Vec<f64>) {
        let mut u = vec![0.0; self.m];
        for j in (0..self.m).rev() {
            u[j] = self.us[idx % self.us.len()];
            idx /= self.us.len();
        }
        let mut x = vec![0.0; self.n];
        for j in (0..self.n).rev() {
            x[j] = self.xs[idx % self.xs.len()];
            idx /= self.xs.len();
        }
        (x, u)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Whole-system certificate: decay rate `c` along the flow, factor
/// `exp(-d_i)` across jumps of type `i`, both gated by `V(x) >= gamma(|u|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCandidate {
    pub v: Expr,
    pub c: f64,
    pub d: Vec<f64>,
    pub gamma: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateConfig {
    pub v: String,
    pub c: f64,
    #[serde(default)]
    pub d: Vec<f64>,
    pub gamma: String,
}

impl LyapunovCandidate {
    /// `n` is the state dimension `V` is defined on.
    pub fn from_config(cfg: &CandidateConfig, n: usize) -> Result<Self, CertifyError> {
        Ok(LyapunovCandidate {
            v: Expr::parse(&cfg.v, Scope::new(n, 0)).map_err(|source| CertifyError::Parse { what: "V", source })?,
            c: cfg.c,
            d: cfg.d.clone(),
            gamma: Expr::parse(&cfg.gamma, Scope::gain())
                .map_err(|source| CertifyError::Parse { what: "gain", source })?,
        })
    }

    pub fn to_config(&self) -> CandidateConfig {
        CandidateConfig {
            v: self.v.to_string(),
            c: self.c,
            d: self.d.clone(),
            gamma: self.gamma.to_string(),
        }
    }
}

/// Certificate for one half of an interconnection, with linear internal gain
/// `gain` (the coefficient of `V_j` in the gate) and input gain `input_gain(r)`.
///
/// `v` is written over the full coupled state but may only read this
/// subsystem's block.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemCertificate {
    pub v: Expr,
    pub c: f64,
    pub d_hat: f64,
    pub gain: f64,
    pub input_gain: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemCertificateConfig {
    pub v: String,
    pub c: f64,
    pub d_hat: f64,
    pub gain: f64,
    #[serde(default = "default_input_gain")]
    pub input_gain: String,
}

fn default_input_gain() -> String {
    "r".into()
}

impl SubsystemCertificate {
    pub fn from_config(cfg: &SubsystemCertificateConfig, total_n: usize) -> Result<Self, CertifyError> {
        Ok(SubsystemCertificate {
            v: Expr::parse(&cfg.v, Scope::new(total_n, 0))
                .map_err(|source| CertifyError::Parse { what: "V", source })?,
            c: cfg.c,
            d_hat: cfg.d_hat,
            gain: cfg.gain,
            input_gain: Expr::parse(&cfg.input_gain, Scope::gain())
                .map_err(|source| CertifyError::Parse { what: "input gain", source })?,
        })
    }

    pub fn to_config(&self) -> SubsystemCertificateConfig {
        SubsystemCertificateConfig {
            v: self.v.to_string(),
            c: self.c,
            d_hat: self.d_hat,
            gain: self.gain,
            input_gain: self.input_gain.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Flow,
    Jump,
    Subsystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ok,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// Jump map index (zero-based) for jump inequalities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<usize>,
    /// `flow` or `jump` inside a subsystem report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub part: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnverifiablePoint {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub scope: &'static str,
    pub region: SamplingRegion,
    /// Inequalities actually evaluated.
    pub checked: usize,
    /// Grid pairs where the gate `V >= gamma(|u|)` did not hold.
    pub gated_out: usize,
    /// Points skipped for lying near a kink of `V`.
    pub near_kink: usize,
    pub unverifiable: Vec<UnverifiablePoint>,
    pub counterexamples: Vec<Counterexample>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Ok
    }
}

enum Outcome {
    Checked,
    GatedOut,
    NearKink,
    Unverifiable(String),
    Violated(Counterexample),
}

fn assemble(condition: Condition, region: &SamplingRegion, outcomes: Vec<(Vec<f64>, Vec<f64>, Outcome)>) -> CheckReport {
    let mut report = CheckReport {
        condition,
        verdict: Verdict::Ok,
        scope: "grid-verified on region",
        region: region.resolved(),
        checked: 0,
        gated_out: 0,
        near_kink: 0,
        unverifiable: Vec::new(),
        counterexamples: Vec::new(),
    };
    for (x, u, o) in outcomes {
        match o {
            Outcome::Checked => report.checked += 1,
            Outcome::GatedOut => report.gated_out += 1,
            Outcome::NearKink => report.near_kink += 1,
            Outcome::Unverifiable(error) => report.unverifiable.push(UnverifiablePoint { x, u, error }),
            Outcome::Violated(ce) => {
                report.checked += 1;
                report.counterexamples.push(ce);
            }
        }
    }
    if !report.counterexamples.is_empty() {
        report.verdict = Verdict::Fail;
    }
    report
}

/// Evaluates `per_point` on every grid pair in parallel; results keep grid order.
fn sweep<F>(grid: &Grid, per_point: F) -> Vec<(Vec<f64>, Vec<f64>, Outcome)>
where
    F: Fn(&[f64], &[f64]) -> Vec<Outcome> + Sync,
{
    (0..grid.total)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let (x, u) = grid.point(idx);
            let outs = per_point(&x, &u);
            outs.into_iter().map(move |o| (x.clone(), u.clone(), o))
        })
        .collect()
}

fn gate(cand: &LyapunovCandidate, x: &[f64], u: &[f64]) -> Result<Option<f64>, EvalError> {
    let vx = cand.v.eval(x, &[])?;
    let threshold = cand.gamma.eval_scalar(norm(u))?;
    Ok((vx >= threshold).then_some(vx))
}

/// Checks that `V` vanishes only at the origin of the state grid and that
/// the gain is zero at zero and strictly increasing on sampled radii.
pub fn check_candidate_shape(v: &Expr, gain: &Expr, n: usize, region: &SamplingRegion) -> Result<(), CertifyError> {
    let grid = region.grid(n, 0)?;
    let zero = vec![0.0; n];
    let v0 = v.eval(&zero, &[])?;
    if v0 != 0.0 {
        return Err(CertifyError::NotPositiveDefinite { x: zero, value: v0 });
    }
    let mut vmax = 0.0f64;
    for idx in 0..grid.total {
        let (x, _) = grid.point(idx);
        let value = v.eval(&x, &[])?;
        if x.iter().any(|c| *c != 0.0) && !(value > 0.0) {
            return Err(CertifyError::NotPositiveDefinite { x, value });
        }
        vmax = vmax.max(value);
    }
    if gain.eval_scalar(0.0)? != 0.0 {
        return Err(CertifyError::NotClassK { r: 0.0 });
    }
    let top = vmax.max(region.input_radius * 2.0).max(1.0);
    let k = region.points_per_axis.max(16);
    let mut prev = 0.0;
    for i in 1..=k {
        let r = top * i as f64 / k as f64;
        let g = gain.eval_scalar(r)?;
        if !(g > prev) {
            return Err(CertifyError::NotClassK { r });
        }
        prev = g;
    }
    Ok(())
}

/// `grad V(x) . f(x, u) <= -c V(x)` wherever `V(x) >= gamma(|u|)`.
pub fn check_flow_condition(
    sys: &ImpulsiveSystem,
    cand: &LyapunovCandidate,
    region: &SamplingRegion,
) -> Result<CheckReport, CertifyError> {
    let grid = region.grid(sys.n, sys.m)?;
    let rho = region.kink_radius();
    let outcomes = sweep(&grid, |x, u| {
        let eval = || -> Result<Outcome, EvalError> {
            let Some(vx) = gate(cand, x, u)? else {
                return Ok(Outcome::GatedOut);
            };
            if cand.v.kink_distance(x, &[])? < rho {
                return Ok(Outcome::NearKink);
            }
            let lhs = dot(&cand.v.grad_fd(x, &[])?, &sys.flow.eval(x, u)?);
            let rhs = -cand.c * vx;
            Ok(if lhs > rhs + region.tol * (1.0 + vx.abs()) {
                Outcome::Violated(Counterexample {
                    x: x.to_vec(),
                    u: u.to_vec(),
                    lhs,
                    rhs,
                    jump: None,
                    part: None,
                })
            } else {
                Outcome::Checked
            })
        };
        vec![eval().unwrap_or_else(|e| Outcome::Unverifiable(e.to_string()))]
    });
    Ok(assemble(Condition::Flow, region, outcomes))
}

/// `V(g_i(x, u)) <= exp(-d_i) V(x)` for every jump map wherever `V(x) >= gamma(|u|)`.
pub fn check_jump_condition(
    sys: &ImpulsiveSystem,
    cand: &LyapunovCandidate,
    region: &SamplingRegion,
) -> Result<CheckReport, CertifyError> {
    if cand.d.len() != sys.jumps.len() {
        return Err(CertifyError::CoefficientCount {
            expected: sys.jumps.len(),
            found: cand.d.len(),
        });
    }
    let grid = region.grid(sys.n, sys.m)?;
    let factors: Vec<f64> = cand.d.iter().map(|d| (-d).exp()).collect();
    let outcomes = sweep(&grid, |x, u| {
        let vx = match gate(cand, x, u) {
            Ok(Some(v)) => v,
            Ok(None) => return vec![Outcome::GatedOut],
            Err(e) => return vec![Outcome::Unverifiable(e.to_string())],
        };
        sys.jumps
            .iter()
            .enumerate()
            .map(|(i, jump)| {
                let lhs = match jump.map.eval(x, u).and_then(|gx| cand.v.eval(&gx, &[])) {
                    Ok(v) => v,
                    Err(e) => return Outcome::Unverifiable(e.to_string()),
                };
                let rhs = factors[i] * vx;
                if lhs > rhs + region.tol * (1.0 + vx.abs()) {
                    Outcome::Violated(Counterexample {
                        x: x.to_vec(),
                        u: u.to_vec(),
                        lhs,
                        rhs,
                        jump: Some(i),
                        part: None,
                    })
                } else {
                    Outcome::Checked
                }
            })
            .collect()
    });
    Ok(assemble(Condition::Jump, region, outcomes))
}

fn block_of(v: &Expr, lo: usize, hi: usize) -> bool {
    let mut ok = true;
    v.for_each_var(&mut |var| {
        if let Var::State(i) = var {
            ok &= i >= lo && i < hi;
        }
        if let Var::Input(_) = var {
            ok = false;
        }
    });
    ok
}

/// Checks the flow and jump inequalities of subsystem `which` (0 or 1) of an
/// interconnection, sampling the full coupled state and that subsystem's input.
///
/// Flow: `grad V_i . f_i <= -c_i V_i` whenever
/// `V_i >= max{gain_ij V_j, gamma_i(|u_i|)}`.
/// Jump: `V_i(g_i) <= max{exp(-d_i) V_i, gain_ij V_j, gamma_i(|u_i|)}` everywhere.
pub fn check_subsystem_conditions(
    subs: [&Subsystem; 2],
    certs: [&SubsystemCertificate; 2],
    which: usize,
    region: &SamplingRegion,
) -> Result<CheckReport, CertifyError> {
    assert!(which < 2, "subsystem index must be 0 or 1");
    let other = 1 - which;
    let n = subs[0].n + subs[1].n;
    let (lo, hi) = if which == 0 { (0, subs[0].n) } else { (subs[0].n, n) };
    let (olo, ohi) = if which == 0 { (subs[0].n, n) } else { (0, subs[0].n) };
    if !block_of(&certs[which].v, lo, hi) {
        return Err(CertifyError::BlockViolation { which: which + 1 });
    }
    if !block_of(&certs[other].v, olo, ohi) {
        return Err(CertifyError::BlockViolation { which: other + 1 });
    }
    let sub = subs[which];
    let cert = certs[which];
    let v_other = &certs[other].v;
    let grid = region.grid(n, sub.m)?;
    let rho = region.kink_radius();
    let decay = (-cert.d_hat).exp();

    let outcomes = sweep(&grid, |x, u| {
        let common = || -> Result<(f64, f64, f64), EvalError> {
            let vi = cert.v.eval(x, &[])?;
            let coupled = cert.gain * v_other.eval(x, &[])?;
            let external = cert.input_gain.eval_scalar(norm(u))?;
            Ok((vi, coupled, external))
        };
        let (vi, coupled, external) = match common() {
            Ok(t) => t,
            Err(e) => return vec![Outcome::Unverifiable(e.to_string())],
        };
        let slack = region.tol * (1.0 + vi.abs());
        let violated = |lhs: f64, rhs: f64, part: &'static str| {
            Outcome::Violated(Counterexample {
                x: x.to_vec(),
                u: u.to_vec(),
                lhs,
                rhs,
                jump: None,
                part: Some(part),
            })
        };

        let flow = || -> Result<Outcome, EvalError> {
            if vi < coupled.max(external) {
                return Ok(Outcome::GatedOut);
            }
            if cert.v.kink_distance(x, &[])? < rho {
                return Ok(Outcome::NearKink);
            }
            let grad = cert.v.grad_fd(x, &[])?;
            let f = sub.flow.eval(x, u)?;
            let lhs = dot(&grad[lo..hi], &f);
            let rhs = -cert.c * vi;
            Ok(if lhs > rhs + slack { violated(lhs, rhs, "flow") } else { Outcome::Checked })
        };
        let jump = || -> Result<Outcome, EvalError> {
            let g = sub.jump.eval(x, u)?;
            let mut after = x.to_vec();
            after[lo..hi].copy_from_slice(&g);
            let lhs = cert.v.eval(&after, &[])?;
            let rhs = (decay * vi).max(coupled).max(external);
            Ok(if lhs > rhs + slack { violated(lhs, rhs, "jump") } else { Outcome::Checked })
        };
        [flow(), jump()]
            .into_iter()
            .map(|r| r.unwrap_or_else(|e| Outcome::Unverifiable(e.to_string())))
            .collect()
    });
    Ok(assemble(Condition::Subsystem, region, outcomes))
}
