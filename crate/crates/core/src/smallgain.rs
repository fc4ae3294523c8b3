//! Small-gain composition of two subsystem certificates with linear internal
//! gains, and the end-to-end check: subsystem certificates, composition,
//! grid audit of the composed certificate, dwell-time verdict.

use serde::Serialize;
use thiserror::Error;

use crate::certify::{
    self, CertifyError, CheckReport, LyapunovCandidate, SamplingRegion, SubsystemCertificate,
};
use crate::dwell::{self, Classification, DwellError, DwellTimeProblem, DwellTimeVerdict};
use crate::expr::{Expr, Func};
use crate::model::{self, Interconnection, JumpRole, ModelError, Subsystem};

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmallGainError {
    #[error("internal gain must be finite and non-negative, got {0}")]
    BadGain(f64),
    #[error("small-gain condition fails: {gamma12} * {gamma21} = {product} >= 1")]
    LoopGain { gamma12: f64, gamma21: f64, product: f64 },
    #[error("jump coefficient d_hat of subsystem {0} is zero")]
    ZeroJumpCoefficient(usize),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("sigma={sigma} outside the admissible interval ({lo}, {hi})")]
    BadSigma { sigma: f64, lo: f64, hi: f64 },
    #[error("subsystem {which} has c={c} < 0; unstable continuous dynamics cannot be certified by this composition")]
    UnstableFlow { which: usize, c: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Dwell(#[from] DwellError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallGainCheck {
    pub gamma12: f64,
    pub gamma21: f64,
    pub product: f64,
    pub passed: bool,
}

/// `gamma12 * gamma21 < 1`, strictly.
pub fn check_small_gain(gamma12: f64, gamma21: f64) -> Result<SmallGainCheck, SmallGainError> {
    for g in [gamma12, gamma21] {
        if !(g.is_finite() && g >= 0.0) {
            return Err(SmallGainError::BadGain(g));
        }
    }
    let product = gamma12 * gamma21;
    Ok(SmallGainCheck {
        gamma12,
        gamma21,
        product,
        passed: product < 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionResult {
    pub s1: f64,
    pub sigma: f64,
    #[serde(serialize_with = "as_text")]
    pub v: Expr,
    pub c: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    #[serde(serialize_with = "as_text")]
    pub gamma: Expr,
    pub epsilon: f64,
}

fn as_text<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

impl CompositionResult {
    /// Jump coefficient for a composed sequence class.
    pub fn coefficient(&self, role: JumpRole) -> f64 {
        match role {
            JumpRole::OnlyFirst => self.d1,
            JumpRole::OnlySecond => self.d2,
            JumpRole::Both => self.d3,
        }
    }

    /// The composed certificate for an interconnection, one `d` per jump map.
    pub fn candidate(&self, ic: &Interconnection) -> LyapunovCandidate {
        LyapunovCandidate {
            v: self.v.clone(),
            c: self.c,
            d: ic.roles.iter().map(|r| self.coefficient(*r)).collect(),
            gamma: self.gamma.clone(),
        }
    }
}

/// Geometric midpoint of `(gamma12, 1/gamma21)`, with finite stand-ins when
/// an endpoint is 0 or infinite.
pub fn default_sigma(gamma12: f64, gamma21: f64) -> f64 {
    match (gamma12 > 0.0, gamma21 > 0.0) {
        (true, true) => (gamma12 / gamma21).sqrt(),
        (true, false) => 2.0 * gamma12,
        (false, true) => 0.5 / gamma21,
        (false, false) => 1.0,
    }
}

fn call(func: Func, args: Vec<Expr>) -> Expr {
    Expr::Call(func, args)
}

/// Builds `V = max{V1/s1, V2}` and its rate coefficients from two subsystem
/// certificates. The scaling `s1` equals `sigma`, which must lie strictly
/// between `gamma12` and `1/gamma21`.
pub fn compose(
    cert1: &SubsystemCertificate,
    cert2: &SubsystemCertificate,
    epsilon: f64,
    sigma_override: Option<f64>,
) -> Result<CompositionResult, SmallGainError> {
    let (g12, g21) = (cert1.gain, cert2.gain);
    let sg = check_small_gain(g12, g21)?;
    if !sg.passed {
        return Err(SmallGainError::LoopGain {
            gamma12: g12,
            gamma21: g21,
            product: sg.product,
        });
    }
    if cert1.d_hat == 0.0 {
        return Err(SmallGainError::ZeroJumpCoefficient(1));
    }
    if cert2.d_hat == 0.0 {
        return Err(SmallGainError::ZeroJumpCoefficient(2));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SmallGainError::BadEpsilon(epsilon));
    }
    let hi = if g21 > 0.0 { 1.0 / g21 } else { f64::INFINITY };
    let sigma = sigma_override.unwrap_or_else(|| default_sigma(g12, g21));
    if !(sigma > g12 && sigma < hi) {
        return Err(SmallGainError::BadSigma { sigma, lo: g12, hi });
    }
    let s1 = sigma;

    let scaled_gain = -(g12 / s1).ln();
    let back_gain = -g21.ln();
    let d1 = cert1.d_hat.min(scaled_gain).min(-epsilon);
    let d2 = cert2.d_hat.min(back_gain).min(-epsilon);
    let d3 = cert1.d_hat.min(cert2.d_hat).min(scaled_gain).min(back_gain);

    let v = Expr::max(vec![Expr::mul(Expr::num(1.0 / s1), cert1.v.clone()), cert2.v.clone()]);
    let prefactor = Expr::max(vec![
        call(Func::Exp, vec![Expr::num(d1)]),
        call(Func::Exp, vec![Expr::num(d2)]),
        call(Func::Exp, vec![Expr::num(d3)]),
        Expr::num(1.0),
    ]);
    let inner = Expr::max(vec![
        Expr::mul(Expr::num(1.0 / s1), cert1.input_gain.clone()),
        cert2.input_gain.clone(),
    ]);
    Ok(CompositionResult {
        s1,
        sigma,
        v,
        c: cert1.c.min(cert2.c),
        d1,
        d2,
        d3,
        gamma: Expr::mul(prefactor, inner),
        epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionAudit {
    pub passed: bool,
    pub flow: CheckReport,
    pub jump: CheckReport,
}

/// Grid audit of the composed certificate on the composed system.
pub fn verify_composition(
    ic: &Interconnection,
    result: &CompositionResult,
    region: &SamplingRegion,
) -> Result<CompositionAudit, SmallGainError> {
    let cand = result.candidate(ic);
    let flow = certify::check_flow_condition(&ic.system, &cand, region)?;
    let jump = certify::check_jump_condition(&ic.system, &cand, region)?;
    Ok(CompositionAudit {
        passed: flow.passed() && jump.passed(),
        flow,
        jump,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub epsilon: f64,
    pub sigma: Option<f64>,
    pub lambda: f64,
    pub t0: f64,
    pub horizon: f64,
    pub region: SamplingRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineStatus {
    IssCertified,
    DwellTimeDivergent,
    CertificateRejected,
    AuditFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub status: PipelineStatus,
    /// Finite-horizon bound when the status is `iss-certified`.
    pub mu_star: Option<f64>,
    pub horizon: f64,
    pub small_gain: SmallGainCheck,
    pub subsystem_checks: [CheckReport; 2],
    pub composition: CompositionResult,
    pub jump_roles: Vec<JumpRole>,
    pub audit: CompositionAudit,
    pub dwell: DwellTimeVerdict,
}

/// Subsystem checks, composition, audit and dwell-time analysis in sequence.
pub fn iss_pipeline(
    sub1: &Subsystem,
    sub2: &Subsystem,
    cert1: &SubsystemCertificate,
    cert2: &SubsystemCertificate,
    cfg: &PipelineConfig,
) -> Result<PipelineReport, SmallGainError> {
    for (which, cert) in [(1, cert1), (2, cert2)] {
        if cert.c < 0.0 {
            return Err(SmallGainError::UnstableFlow { which, c: cert.c });
        }
    }
    let checks = [
        certify::check_subsystem_conditions([sub1, sub2], [cert1, cert2], 0, &cfg.region)?,
        certify::check_subsystem_conditions([sub1, sub2], [cert1, cert2], 1, &cfg.region)?,
    ];
    let composition = compose(cert1, cert2, cfg.epsilon, cfg.sigma)?;
    let ic = model::interconnect(sub1, sub2, cfg.t0, cfg.horizon)?;
    let audit = verify_composition(&ic, &composition, &cfg.region)?;
    let d: Vec<f64> = ic.roles.iter().map(|r| composition.coefficient(*r)).collect();
    let prob = DwellTimeProblem::from_family(&ic.system.family(), &d, composition.c, cfg.lambda, cfg.t0, cfg.horizon)?;
    let verdict = dwell::minimal_mu(&prob)?;

    let status = if !checks.iter().all(CheckReport::passed) {
        PipelineStatus::CertificateRejected
    } else if !audit.passed {
        PipelineStatus::AuditFailed
    } else if verdict.classification == Some(Classification::Divergent) {
        PipelineStatus::DwellTimeDivergent
    } else {
        PipelineStatus::IssCertified
    };
    Ok(PipelineReport {
        status,
        mu_star: (status == PipelineStatus::IssCertified).then_some(verdict.mu_star),
        horizon: cfg.horizon,
        small_gain: check_small_gain(cert1.gain, cert2.gain)?,
        subsystem_checks: checks,
        composition,
        jump_roles: ic.roles,
        audit,
        dwell: verdict,
    })
}
