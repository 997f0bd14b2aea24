//! Run configuration files.
//!
//! A config is a TOML document with a fixed set of sections. Every section
//! rejects unknown keys. See the crate README for the full key list.

use std::path::PathBuf;

use eife_core::{
    builtin_allen_cahn_wave, builtin_flory_huggins, builtin_linear_rd, custom_problem, BoundaryKind, CustomSpec,
    ErrorReference, InitialMode, LoadModel, Problem, Scheme,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Run,
    Convergence,
    Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SchemeName {
    Eife1,
    Eife2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BcName {
    Homogeneous,
    Dirichlet,
    Periodic,
}

impl From<BcName> for BoundaryKind {
    fn from(b: BcName) -> Self {
        match b {
            BcName::Homogeneous => BoundaryKind::HomogeneousDirichlet,
            BcName::Dirichlet => BoundaryKind::Dirichlet,
            BcName::Periodic => BoundaryKind::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LoadName {
    Lumped,
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum InitialName {
    Interpolate,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ReferenceName {
    Exact,
    Interpolant,
    InterpolantGradient,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    problem: RawProblem,
    mesh: RawMesh,
    time: RawTime,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
    study: Option<RawStudy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: String,
    eps: Option<f64>,
    theta: Option<f64>,
    theta_c: Option<f64>,
    seed: Option<u64>,
    domain: Option<Vec<[f64; 2]>>,
    diffusion: Option<f64>,
    reaction: Option<String>,
    initial: Option<String>,
    exact: Option<String>,
    boundary: Option<String>,
    boundary_rate: Option<String>,
    admissible: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    n: Vec<usize>,
    bc: Option<BcName>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    scheme: SchemeName,
    c2: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    nt: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    load: Option<LoadName>,
    initial: Option<InitialName>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    observe_every: Option<usize>,
    snapshot_every: Option<usize>,
    series: Option<bool>,
    report: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    kind: StudyKind,
    levels: usize,
    reference: Option<ReferenceName>,
    parallel: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub levels: usize,
    pub reference: ErrorReference,
    pub parallel: bool,
}

/// Validated configuration. The problem itself is rebuilt on demand since
/// the seed may be overridden from the command line.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    problem: RawProblemData,
    pub n: Vec<usize>,
    pub bc: BoundaryKind,
    pub scheme: Scheme,
    pub t_end: f64,
    pub dt: f64,
    pub nt: usize,
    pub load: LoadModel,
    pub initial: InitialMode,
    pub out_dir: PathBuf,
    pub observe_every: usize,
    pub snapshot_every: Option<usize>,
    pub series: bool,
    pub report_name: String,
    pub study: Option<StudyConfig>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
struct RawProblemData {
    name: String,
    eps: Option<f64>,
    theta: Option<f64>,
    theta_c: Option<f64>,
    domain: Option<Vec<(f64, f64)>>,
    custom: Option<CustomSpec>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn reject(key: &str, value: &Option<impl Sized>, problem: &str) -> Result<(), CliError> {
    if value.is_some() {
        return Err(config_err(format!(
            "key 'problem.{key}' does not apply to problem '{problem}'"
        )));
    }
    Ok(())
}

impl RawProblemData {
    fn from_raw(p: RawProblem, bc: Option<BcName>) -> Result<Self, CliError> {
        let name = p.name.as_str();
        let domain = p.domain.map(|d| d.iter().map(|b| (b[0], b[1])).collect::<Vec<_>>());
        match name {
            "linear_rd" | "allen_cahn_wave" | "flory_huggins" => {
                for (key, v) in [
                    ("diffusion", &p.diffusion.map(|_| ())),
                    ("reaction", &p.reaction.as_ref().map(|_| ())),
                    ("initial", &p.initial.as_ref().map(|_| ())),
                    ("exact", &p.exact.as_ref().map(|_| ())),
                    ("boundary", &p.boundary.as_ref().map(|_| ())),
                    ("boundary_rate", &p.boundary_rate.as_ref().map(|_| ())),
                    ("admissible", &p.admissible.map(|_| ())),
                ] {
                    reject(key, v, name)?;
                }
                if name != "flory_huggins" {
                    reject("theta", &p.theta, name)?;
                    reject("theta_c", &p.theta_c, name)?;
                    reject("seed", &p.seed, name)?;
                    reject("domain", &domain, name)?;
                }
                if name == "linear_rd" {
                    reject("eps", &p.eps, name)?;
                }
                Ok(RawProblemData {
                    name: p.name,
                    eps: p.eps,
                    theta: p.theta,
                    theta_c: p.theta_c,
                    domain,
                    custom: None,
                })
            }
            "custom" => {
                for (key, v) in [("eps", &p.eps), ("theta", &p.theta), ("theta_c", &p.theta_c)] {
                    reject(key, v, name)?;
                }
                let need = |key: &str, v: Option<String>| v.ok_or_else(|| config_err(format!("missing key 'problem.{key}'")));
                let spec = CustomSpec {
                    diffusion: p.diffusion.ok_or_else(|| config_err("missing key 'problem.diffusion'"))?,
                    reaction: need("reaction", p.reaction)?,
                    initial: need("initial", p.initial)?,
                    exact: p.exact,
                    boundary: p.boundary,
                    boundary_rate: p.boundary_rate,
                    bc: bc.map(BoundaryKind::from),
                    domain: domain.clone().ok_or_else(|| config_err("missing key 'problem.domain'"))?,
                    t_end: 0.0,
                    admissible: p.admissible.map(|a| (a[0], a[1])),
                };
                Ok(RawProblemData {
                    name: p.name,
                    eps: None,
                    theta: None,
                    theta_c: None,
                    domain,
                    custom: Some(spec),
                })
            }
            other => Err(config_err(format!(
                "key 'problem.name': unknown problem '{other}' (expected linear_rd, allen_cahn_wave, flory_huggins or custom)"
            ))),
        }
    }

    /// The problem with its own final time (zero for custom problems).
    fn base(&self, seed: u64) -> Result<Problem, CliError> {
        let mut p = match self.name.as_str() {
            "linear_rd" => builtin_linear_rd(),
            "allen_cahn_wave" => builtin_allen_cahn_wave(self.eps.unwrap_or(0.05))?,
            "flory_huggins" => builtin_flory_huggins(
                self.eps.unwrap_or(0.01),
                self.theta.unwrap_or(0.8),
                self.theta_c.unwrap_or(1.6),
                seed,
            )?,
            _ => custom_problem(self.custom.as_ref().expect("custom spec present for custom problems"))?,
        };
        if let Some(d) = &self.domain {
            p.domain = d.clone();
        }
        Ok(p)
    }

    fn build(&self, seed: u64, t_end: f64) -> Result<Problem, CliError> {
        let mut p = self.base(seed)?;
        p.t_end = t_end;
        Ok(p)
    }

    fn default_t_end(&self) -> Result<Option<f64>, CliError> {
        if self.custom.is_some() {
            return Ok(None);
        }
        Ok(Some(self.base(0)?.t_end))
    }
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.message().to_string()))?;
    let seed = raw.problem.seed;
    let problem = RawProblemData::from_raw(raw.problem, raw.mesh.bc)?;

    let t_end = match (raw.time.t_end, problem.default_t_end()?) {
        (Some(t), _) => t,
        (None, Some(t)) => t,
        (None, None) => return Err(config_err("missing key 'time.t_end'")),
    };
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(config_err(format!(
            "key 'time.t_end' must be non-negative, got {t_end}"
        )));
    }
    let (dt, nt) = match (raw.time.dt, raw.time.nt) {
        (None, None) => return Err(config_err("missing key 'time.dt' or 'time.nt'")),
        (Some(dt), None) => {
            if !(dt > 0.0) {
                return Err(config_err(format!("key 'time.dt' must be positive, got {dt}")));
            }
            let steps = t_end / dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                return Err(config_err(format!(
                    "key 'time.dt': T = {t_end} is not a multiple of dt = {dt}"
                )));
            }
            (dt, steps.round() as usize)
        }
        (None, Some(nt)) => {
            if nt == 0 {
                return Err(config_err("key 'time.nt' must be at least 1"));
            }
            (t_end / nt as f64, nt)
        }
        (Some(dt), Some(nt)) => {
            if (dt * nt as f64 - t_end).abs() > 1e-9 * t_end.max(1.0) {
                return Err(config_err(format!(
                    "keys 'time.dt' and 'time.nt' disagree: dt * nt = {} but T = {t_end}",
                    dt * nt as f64
                )));
            }
            (dt, nt)
        }
    };
    let scheme = match raw.time.scheme {
        SchemeName::Eife1 => {
            if raw.time.c2.is_some() {
                return Err(config_err("key 'time.c2' applies to eife2 only"));
            }
            Scheme::Eife1
        }
        SchemeName::Eife2 => Scheme::Eife2 {
            c2: raw.time.c2.unwrap_or(0.5),
        },
    };
    scheme
        .validate()
        .map_err(|_| config_err("key 'time.c2' must lie in (0, 1]"))?;

    let n = raw.mesh.n;
    if n.is_empty() || n.len() > 3 {
        return Err(config_err(format!(
            "key 'mesh.n' needs 1 to 3 entries, got {}",
            n.len()
        )));
    }
    let probe = problem.build(seed.unwrap_or(0), t_end)?;
    if probe.domain.len() != n.len() {
        return Err(config_err(format!(
            "key 'mesh.n' has {} axes but problem '{}' is {}-dimensional",
            n.len(),
            probe.name,
            probe.domain.len()
        )));
    }
    let bc = match raw.mesh.bc {
        Some(b) if BoundaryKind::from(b) != probe.boundary_kind() => {
            return Err(config_err(format!(
                "key 'mesh.bc': {:?} is incompatible with problem '{}', which declares {:?}",
                BoundaryKind::from(b),
                probe.name,
                probe.boundary_kind()
            )))
        }
        _ => probe.boundary_kind(),
    };

    let observe_every = raw.output.observe_every.unwrap_or((nt / 100).max(1));
    if observe_every == 0 {
        return Err(config_err("key 'output.observe_every' must be at least 1"));
    }
    if let Some(s) = raw.output.snapshot_every {
        if s == 0 || s % observe_every != 0 {
            return Err(config_err(format!(
                "key 'output.snapshot_every' must be a positive multiple of output.observe_every ({observe_every})"
            )));
        }
    }
    let study = match raw.study {
        Some(s) => {
            if s.levels == 0 {
                return Err(config_err("key 'study.levels' must be at least 1"));
            }
            Some(StudyConfig {
                kind: s.kind,
                levels: s.levels,
                reference: match s.reference.unwrap_or(ReferenceName::InterpolantGradient) {
                    ReferenceName::Exact => ErrorReference::Exact,
                    ReferenceName::Interpolant => ErrorReference::Interpolant,
                    ReferenceName::InterpolantGradient => ErrorReference::InterpolantGradient,
                },
                parallel: s.parallel.unwrap_or(false),
            })
        }
        None => None,
    };
    if matches!(raw.mode, Some(Mode::Convergence) | Some(Mode::Timing)) && study.is_none() {
        return Err(config_err("missing section 'study' for a convergence or timing config"));
    }

    Ok(RunConfig {
        mode: raw.mode,
        problem,
        n,
        bc,
        scheme,
        t_end,
        dt,
        nt,
        load: match raw.solver.load.unwrap_or(LoadName::Lumped) {
            LoadName::Lumped => LoadModel::Lumped,
            LoadName::Interpolated => LoadModel::Interpolated,
        },
        initial: match raw.solver.initial.unwrap_or(InitialName::Interpolate) {
            InitialName::Interpolate => InitialMode::Interpolate,
            InitialName::Project => InitialMode::Project,
        },
        out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        observe_every,
        snapshot_every: raw.output.snapshot_every,
        series: raw.output.series.unwrap_or(true),
        report_name: raw.output.report.unwrap_or_else(|| "report.csv".into()),
        study,
        seed,
    })
}

impl RunConfig {
    /// The configured problem, with `seed` taking precedence over the
    /// config's own seed.
    pub fn problem(&self, seed: Option<u64>) -> Result<Problem, CliError> {
        self.problem.build(seed.or(self.seed).unwrap_or(0), self.t_end)
    }

    pub fn problem_name(&self) -> &str {
        &self.problem.name
    }
}
