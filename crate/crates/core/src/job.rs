//! Batch jobs: a JSON file naming systems, subsystems, certificates and
//! inputs, followed by an ordered list of tasks that write CSV trajectories
//! and JSON reports into an output directory.
//!
//! Every reference and expression is resolved before the first task runs.
//! Exit codes: 0 success, 1 task failure, 2 unreadable or malformed job,
//! 3 invalid job contents.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certify::{
    self, CandidateConfig, CheckReport, LyapunovCandidate, SamplingRegion, SubsystemCertificate,
    SubsystemCertificateConfig,
};
use crate::dwell::{self, ClassSpec, DwellTimeProblem, DwellTimeVerdict};
use crate::model::{ImpulsiveSystem, InputConfig, InputSignal, Subsystem, SubsystemConfig, SystemConfig};
use crate::smallgain::{self, CompositionResult, PipelineConfig, SmallGainCheck, DEFAULT_EPSILON};
use crate::sim;
use crate::timegrid::SequenceFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    #[serde(default)]
    pub systems: BTreeMap<String, SystemConfig>,
    #[serde(default)]
    pub subsystems: BTreeMap<String, SubsystemConfig>,
    #[serde(default)]
    pub certificates: BTreeMap<String, CertificateConfig>,
    #[serde(default)]
    pub inputs: BTreeMap<String, InputConfig>,
    pub tasks: Vec<TaskConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CertificateConfig {
    Candidate(CandidateConfig),
    Subsystem(SubsystemCertificateConfig),
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskConfig {
    Simulate {
        system: String,
        #[serde(default)]
        input: Option<String>,
        x0: Vec<f64>,
        horizon: f64,
        dt: f64,
        output: String,
    },
    Certify {
        system: String,
        certificate: String,
        region: SamplingRegion,
        output: String,
    },
    Dwell {
        /// Take the impulse sequences from this system...
        #[serde(default)]
        system: Option<String>,
        /// ...or list them directly.
        #[serde(default)]
        sequences: Option<SequenceFamily>,
        d: Vec<f64>,
        c: f64,
        lambda: f64,
        #[serde(default)]
        t0: f64,
        horizon: f64,
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default)]
        feasible_lambda: bool,
        #[serde(default)]
        sample: Option<SampleConfig>,
        output: String,
    },
    Compose {
        subsystems: [String; 2],
        certificates: [String; 2],
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        sigma: Option<f64>,
        output: String,
    },
    Pipeline {
        subsystems: [String; 2],
        certificates: [String; 2],
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        sigma: Option<f64>,
        lambda: f64,
        #[serde(default)]
        t0: f64,
        horizon: f64,
        region: SamplingRegion,
        output: String,
    },
}

/// Draw one family from the dwell-time class, seeded by the run's seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub intensity: f64,
    /// Defaults to the task's `mu`, or to the computed minimal `mu`.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Defaults to the task's horizon.
    #[serde(default)]
    pub horizon: Option<f64>,
}

impl TaskConfig {
    fn kind(&self) -> &'static str {
        match self {
            TaskConfig::Simulate { .. } => "simulate",
            TaskConfig::Certify { .. } => "certify",
            TaskConfig::Dwell { .. } => "dwell",
            TaskConfig::Compose { .. } => "compose",
            TaskConfig::Pipeline { .. } => "pipeline",
        }
    }

    fn output(&self) -> &str {
        match self {
            TaskConfig::Simulate { output, .. }
            | TaskConfig::Certify { output, .. }
            | TaskConfig::Dwell { output, .. }
            | TaskConfig::Compose { output, .. }
            | TaskConfig::Pipeline { output, .. } => output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Parse,
    Validation,
    Task,
}

/// Machine-readable error record, printed as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl JobError {
    fn parse(message: impl Into<String>) -> Self {
        JobError {
            kind: ErrorKind::Parse,
            message: message.into(),
            task: None,
            name: None,
        }
    }

    fn invalid(task: Option<usize>, name: Option<&str>, message: impl Into<String>) -> Self {
        JobError {
            kind: ErrorKind::Validation,
            message: message.into(),
            task,
            name: name.map(str::to_string),
        }
    }

    fn failed(task: Option<usize>, message: impl Into<String>) -> Self {
        JobError {
            kind: ErrorKind::Task,
            message: message.into(),
            task,
            name: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Parse => 2,
            ErrorKind::Validation => 3,
            ErrorKind::Task => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub errors: Vec<JobError>,
}

enum Prepared {
    Simulate {
        sys: ImpulsiveSystem,
        input: InputSignal,
        x0: Vec<f64>,
        horizon: f64,
        dt: f64,
    },
    Certify {
        system: String,
        certificate: String,
        sys: ImpulsiveSystem,
        cand: LyapunovCandidate,
        region: SamplingRegion,
    },
    Dwell {
        prob: DwellTimeProblem,
        d: Vec<f64>,
        mu: Option<f64>,
        feasible_lambda: bool,
        sample: Option<SampleConfig>,
    },
    Compose {
        certs: [SubsystemCertificate; 2],
        epsilon: f64,
        sigma: Option<f64>,
    },
    Pipeline {
        subs: [Subsystem; 2],
        certs: [SubsystemCertificate; 2],
        cfg: PipelineConfig,
    },
}

struct Resolver<'a> {
    job: &'a JobFile,
    task: usize,
}

impl Resolver<'_> {
    fn err(&self, name: &str, msg: impl std::fmt::Display) -> JobError {
        JobError::invalid(Some(self.task), Some(name), msg.to_string())
    }

    fn lookup<'m, T>(&self, map: &'m BTreeMap<String, T>, what: &str, name: &str) -> Result<&'m T, JobError> {
        map.get(name)
            .ok_or_else(|| self.err(name, format!("unknown {what} '{name}'")))
    }

    fn system(&self, name: &str) -> Result<ImpulsiveSystem, JobError> {
        let cfg = self.lookup(&self.job.systems, "system", name)?;
        ImpulsiveSystem::from_config(cfg).map_err(|e| self.err(name, e))
    }

    fn validated_system(&self, name: &str, horizon: f64) -> Result<ImpulsiveSystem, JobError> {
        self.system(name)?
            .validated(horizon)
            .map_err(|e| self.err(name, e))
    }

    fn pair(&self, names: &[String; 2]) -> Result<[Subsystem; 2], JobError> {
        let a = self.lookup(&self.job.subsystems, "subsystem", &names[0])?;
        let b = self.lookup(&self.job.subsystems, "subsystem", &names[1])?;
        let (a, b) = Subsystem::pair_from_config(a, b).map_err(|e| self.err(&names[0], e))?;
        Ok([a, b])
    }

    fn subsystem_certs(&self, names: &[String; 2], total_n: usize) -> Result<[SubsystemCertificate; 2], JobError> {
        let one = |name: &str| match self.lookup(&self.job.certificates, "certificate", name)? {
            CertificateConfig::Subsystem(cfg) => {
                SubsystemCertificate::from_config(cfg, total_n).map_err(|e| self.err(name, e))
            }
            CertificateConfig::Candidate(_) => Err(self.err(name, "expected a subsystem certificate")),
        };
        Ok([one(&names[0])?, one(&names[1])?])
    }

    fn prepare(&self, cfg: &TaskConfig) -> Result<Prepared, JobError> {
        match cfg {
            TaskConfig::Simulate {
                system,
                input,
                x0,
                horizon,
                dt,
                ..
            } => {
                let sys = self.validated_system(system, *horizon)?;
                let input = match input {
                    Some(name) => {
                        let cfg = self.lookup(&self.job.inputs, "input", name)?;
                        InputSignal::from_config(cfg, sys.m).map_err(|e| self.err(name, e))?
                    }
                    None => InputSignal::Zero(sys.m),
                };
                if x0.len() != sys.n {
                    return Err(self.err(system, format!("x0 has {} entries, system has n={}", x0.len(), sys.n)));
                }
                Ok(Prepared::Simulate {
                    sys,
                    input,
                    x0: x0.clone(),
                    horizon: *horizon,
                    dt: *dt,
                })
            }
            TaskConfig::Certify {
                system,
                certificate,
                region,
                ..
            } => {
                let sys = self.system(system)?;
                let cand = match self.lookup(&self.job.certificates, "certificate", certificate)? {
                    CertificateConfig::Candidate(c) => {
                        LyapunovCandidate::from_config(c, sys.n).map_err(|e| self.err(certificate, e))?
                    }
                    CertificateConfig::Subsystem(_) => {
                        return Err(self.err(certificate, "expected a candidate certificate"))
                    }
                };
                if cand.d.len() != sys.jumps.len() {
                    return Err(self.err(
                        certificate,
                        format!("{} jump coefficients for {} jump maps", cand.d.len(), sys.jumps.len()),
                    ));
                }
                Ok(Prepared::Certify {
                    system: system.clone(),
                    certificate: certificate.clone(),
                    sys,
                    cand,
                    region: *region,
                })
            }
            TaskConfig::Dwell {
                system,
                sequences,
                d,
                c,
                lambda,
                t0,
                horizon,
                mu,
                feasible_lambda,
                sample,
                ..
            } => {
                let family = match (system, sequences) {
                    (Some(name), None) => self.validated_system(name, *horizon)?.family(),
                    (None, Some(f)) => f.clone(),
                    _ => return Err(self.err("dwell", "give exactly one of 'system' and 'sequences'")),
                };
                let prob = DwellTimeProblem::from_family(&family, d, *c, *lambda, *t0, *horizon)
                    .map_err(|e| self.err("dwell", e))?;
                if let Some(mu) = mu {
                    if !(*mu >= 0.0) {
                        return Err(self.err("mu", "mu must be non-negative"));
                    }
                }
                Ok(Prepared::Dwell {
                    prob,
                    d: d.clone(),
                    mu: *mu,
                    feasible_lambda: *feasible_lambda,
                    sample: sample.clone(),
                })
            }
            TaskConfig::Compose {
                subsystems,
                certificates,
                epsilon,
                sigma,
                ..
            } => {
                let subs = self.pair(subsystems)?;
                let certs = self.subsystem_certs(certificates, subs[0].n + subs[1].n)?;
                Ok(Prepared::Compose {
                    certs,
                    epsilon: *epsilon,
                    sigma: *sigma,
                })
            }
            TaskConfig::Pipeline {
                subsystems,
                certificates,
                epsilon,
                sigma,
                lambda,
                t0,
                horizon,
                region,
                ..
            } => {
                let subs = self.pair(subsystems)?;
                let certs = self.subsystem_certs(certificates, subs[0].n + subs[1].n)?;
                Ok(Prepared::Pipeline {
                    subs,
                    certs,
                    cfg: PipelineConfig {
                        epsilon: *epsilon,
                        sigma: *sigma,
                        lambda: *lambda,
                        t0: *t0,
                        horizon: *horizon,
                        region: *region,
                    },
                })
            }
        }
    }
}

fn normalized(p: &str) -> Option<PathBuf> {
    let path = Path::new(p);
    if p.is_empty() || path.is_absolute() {
        return None;
    }
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::Normal(s) => out.push(s),
            Component::CurDir => {}
            _ => return None,
        }
    }
    (!out.as_os_str().is_empty()).then_some(out)
}

/// Parses a job file's text. Errors carry exit code 2.
pub fn parse_job(text: &str) -> Result<JobFile, JobError> {
    serde_json::from_str(text).map_err(|e| JobError::parse(format!("malformed job file: {e}")))
}

fn prepare_all(job: &JobFile) -> Result<Vec<(PathBuf, Prepared)>, JobError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, task) in job.tasks.iter().enumerate() {
        let path = normalized(task.output()).ok_or_else(|| {
            JobError::invalid(
                Some(i + 1),
                Some(task.output()),
                "output must be a relative path inside the output directory",
            )
        })?;
        if !seen.insert(path.clone()) {
            return Err(JobError::invalid(Some(i + 1), Some(task.output()), "output path used by an earlier task"));
        }
        let prepared = Resolver { job, task: i + 1 }.prepare(task)?;
        out.push((path, prepared));
    }
    Ok(out)
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    system: &'a str,
    certificate: &'a str,
    shape: String,
    reports: Vec<CheckReport>,
}

#[derive(Serialize)]
struct DwellReport {
    #[serde(flatten)]
    verdict: DwellTimeVerdict,
    lambda: f64,
    c: f64,
    t0: f64,
    horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feasible_lambda: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct ComposeReport {
    small_gain: SmallGainCheck,
    #[serde(flatten)]
    composition: CompositionResult,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_task(task: Prepared, path: &Path, seed: u64) -> Result<String, String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    match task {
        Prepared::Simulate {
            sys,
            input,
            x0,
            horizon,
            dt,
        } => {
            let traj = sim::simulate(&sys, &x0, &input, horizon, dt).map_err(|e| e.to_string())?;
            let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut w = BufWriter::new(file);
            traj.write_csv(&mut w).map_err(|e| e.to_string())?;
            w.flush().map_err(|e| e.to_string())?;
            Ok(format!("{} samples", traj.samples.len()))
        }
        Prepared::Certify {
            system,
            certificate,
            sys,
            cand,
            region,
        } => {
            let shape = match certify::check_candidate_shape(&cand.v, &cand.gamma, sys.n, &region) {
                Ok(()) => "ok".to_string(),
                Err(e) => e.to_string(),
            };
            let flow = certify::check_flow_condition(&sys, &cand, &region).map_err(|e| e.to_string())?;
            let jump = certify::check_jump_condition(&sys, &cand, &region).map_err(|e| e.to_string())?;
            let summary = format!("flow {:?}, jump {:?}", flow.verdict, jump.verdict).to_lowercase();
            write_json(
                path,
                &CertifyReport {
                    system: &system,
                    certificate: &certificate,
                    shape,
                    reports: vec![flow, jump],
                },
            )?;
            Ok(summary)
        }
        Prepared::Dwell {
            prob,
            d,
            mu,
            feasible_lambda,
            sample,
        } => {
            let verdict = dwell::minimal_mu(&prob).map_err(|e| e.to_string())?;
            let check = mu.map(|mu| json!({"mu": mu, "passed": verdict.mu_star <= mu}));
            let lambda_star = if feasible_lambda {
                let target = mu.unwrap_or(verdict.mu_star);
                Some(dwell::feasible_lambda(&prob, target).map_err(|e| e.to_string())?)
            } else {
                None
            };
            let sample = match sample {
                Some(cfg) => {
                    let class = ClassSpec {
                        mu: cfg.mu.or(mu).unwrap_or(verdict.mu_star),
                        lambda: prob.lambda,
                        c: prob.c,
                        d,
                        t0: prob.t0,
                        horizon: cfg.horizon.unwrap_or(prob.horizon),
                    };
                    let family = dwell::sample_in_class(seed, &class, cfg.intensity).map_err(|e| e.to_string())?;
                    Some(json!({"seed": seed, "mu": class.mu, "intensity": cfg.intensity, "family": family}))
                }
                None => None,
            };
            let summary = format!("mu* = {}", verdict.mu_star);
            write_json(
                path,
                &DwellReport {
                    verdict,
                    lambda: prob.lambda,
                    c: prob.c,
                    t0: prob.t0,
                    horizon: prob.horizon,
                    check,
                    feasible_lambda: lambda_star,
                    sample,
                },
            )?;
            Ok(summary)
        }
        Prepared::Compose { certs, epsilon, sigma } => {
            let small_gain = smallgain::check_small_gain(certs[0].gain, certs[1].gain).map_err(|e| e.to_string())?;
            let composition = smallgain::compose(&certs[0], &certs[1], epsilon, sigma).map_err(|e| e.to_string())?;
            let summary = format!("d = ({}, {}, {})", composition.d1, composition.d2, composition.d3);
            write_json(path, &ComposeReport { small_gain, composition })?;
            Ok(summary)
        }
        Prepared::Pipeline { subs, certs, cfg } => {
            let report = smallgain::iss_pipeline(&subs[0], &subs[1], &certs[0], &certs[1], &cfg)
                .map_err(|e| e.to_string())?;
            let summary = serde_json::to_value(report.status)
                .map(|v| v.as_str().unwrap_or_default().to_string())
                .unwrap_or_default();
            write_json(path, &report)?;
            Ok(summary)
        }
    }
}

/// Parses, validates and runs a job. Error records go to stderr as JSON
/// lines; a progress line per task goes to stdout unless `quiet`.
pub fn run_job(job_path: &Path, opts: &RunOptions) -> RunOutcome {
    let fail = |e: JobError| {
        eprintln!("{}", serde_json::to_string(&e).unwrap_or_default());
        RunOutcome {
            exit_code: e.exit_code(),
            artifacts: Vec::new(),
            errors: vec![e],
        }
    };
    let text = match fs::read_to_string(job_path) {
        Ok(t) => t,
        Err(e) => return fail(JobError::parse(format!("cannot read {}: {e}", job_path.display()))),
    };
    let job = match parse_job(&text) {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    let prepared = match prepare_all(&job) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    if let Err(e) = fs::create_dir_all(&opts.out_dir) {
        return fail(JobError::failed(None, format!("{}: {e}", opts.out_dir.display())));
    }

    let mut outcome = RunOutcome {
        exit_code: 0,
        artifacts: Vec::new(),
        errors: Vec::new(),
    };
    for (i, (rel, task)) in prepared.into_iter().enumerate() {
        let kind = job.tasks[i].kind();
        let path = opts.out_dir.join(rel);
        match run_task(task, &path, opts.seed) {
            Ok(summary) => {
                if !opts.quiet {
                    println!("task {} {kind}: {} ({summary})", i + 1, path.display());
                }
                outcome.artifacts.push(path);
            }
            Err(msg) => {
                let e = JobError::failed(Some(i + 1), format!("{kind}: {msg}"));
                eprintln!("{}", serde_json::to_string(&e).unwrap_or_default());
                outcome.exit_code = 1;
                outcome.errors.push(e);
            }
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = r#"{
        "systems": {"ex1": {"n": 1, "flow": ["-0.2*x1"], "jumps": [
            {"sequence": {"kind": "periodic", "start": 1, "period": 2}, "map": ["2*x1"]},
            {"sequence": {"kind": "periodic", "start": 2, "period": 2}, "map": ["0.6*x1"]}]}},
        "certificates": {"V": {"kind": "candidate", "v": "abs(x1)", "c": 0.2, "d": [-0.6931471805599453, 0.5108256237659907], "gamma": "r"}},
        "tasks": [
            {"kind": "simulate", "system": "ex1", "x0": [1], "horizon": 6, "dt": 0.001, "output": "traj.csv"},
            {"kind": "certify", "system": "ex1", "certificate": "V", "region": {"state_radius": 10, "points_per_axis": 41}, "output": "cert.json"},
            {"kind": "dwell", "system": "ex1", "d": [-0.6931471805599453, 0.5108256237659907], "c": 0.2, "lambda": 0.1, "horizon": 100, "mu": 0.7, "output": "dwell.json"}
        ]}"#;

    fn run_text(text: &str) -> (RunOutcome, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let job = dir.path().join("job.json");
        fs::write(&job, text).unwrap();
        let opts = RunOptions {
            out_dir: dir.path().join("out"),
            seed: 1,
            quiet: true,
        };
        (run_job(&job, &opts), dir)
    }

    #[test]
    fn runs_example1() {
        let (out, dir) = run_text(EX1);
        assert_eq!(out.exit_code, 0, "{:?}", out.errors);
        assert_eq!(out.artifacts.len(), 3);
        let cert: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("out/cert.json")).unwrap()).unwrap();
        assert_eq!(cert["shape"], "ok");
        assert_eq!(cert["reports"][0]["verdict"], "ok");
        assert_eq!(cert["reports"][1]["verdict"], "ok");
        let dwell: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("out/dwell.json")).unwrap()).unwrap();
        assert_eq!(dwell["check"]["passed"], true);
        assert_eq!(dwell["classification"], "contractive");
    }

    #[test]
    fn parse_errors_exit_2() {
        assert_eq!(run_text("{").0.exit_code, 2);
        assert_eq!(run_text(r#"{"tasks": [], "bogus": 1}"#).0.exit_code, 2);
        assert_eq!(run_text(r#"{"tasks": [{"kind": "explode", "output": "a"}]}"#).0.exit_code, 2);
    }

    #[test]
    fn validation_errors_exit_3() {
        let dangling = EX1.replace(r#""certificate": "V""#, r#""certificate": "W""#);
        let (out, _d) = run_text(&dangling);
        assert_eq!(out.exit_code, 3);
        assert_eq!(out.errors[0].name.as_deref(), Some("W"));
        assert!(out.errors[0].message.contains("'W'"));

        let collide = EX1.replace("cert.json", "traj.csv");
        assert_eq!(run_text(&collide).0.exit_code, 3);
        let bad_expr = EX1.replace("-0.2*x1", "-0.2*x9");
        assert_eq!(run_text(&bad_expr).0.exit_code, 3);
        let escape = EX1.replace("traj.csv", "../traj.csv");
        assert_eq!(run_text(&escape).0.exit_code, 3);
    }

    #[test]
    fn task_failure_exit_1() {
        // step larger than the gap between impulses
        let big_step = EX1.replace(r#""dt": 0.001"#, r#""dt": 5"#);
        let (out, dir) = run_text(&big_step);
        assert_eq!(out.exit_code, 1);
        assert_eq!(out.errors[0].task, Some(1));
        assert!(dir.path().join("out/dwell.json").exists());
    }

    #[test]
    fn deterministic_sampling() {
        let job = EX1.replace(
            r#""mu": 0.7, "output""#,
            r#""mu": 0.7, "feasible_lambda": true, "sample": {"intensity": 0.5, "horizon": 20}, "output""#,
        );
        let (a, da) = run_text(&job);
        let (b, db) = run_text(&job);
        assert_eq!(a.exit_code, 0, "{:?}", a.errors);
        assert_eq!(b.exit_code, 0);
        let read = |d: &tempfile::TempDir| fs::read(d.path().join("out/dwell.json")).unwrap();
        assert_eq!(read(&da), read(&db));
        let v: serde_json::Value = serde_json::from_slice(&read(&da)).unwrap();
        assert!(v["sample"]["family"].is_array());
        assert!(v["feasible_lambda"].is_number());
    }
}
