//! Error norms, the Flory–Huggins energy, and convergence and timing studies.

use std::time::SystemTime;

use rayon::prelude::*;

use crate::assembly::{InitialMode, LoadModel};
use crate::error::{EifeError, Result};
use crate::mesh::TensorMesh;
use crate::problems::{EnergyParams, Problem};
use crate::quadrature::{integrate, FullField, GaussRule};
use crate::stepper::{run, RunOptions, Scheme, SchemeConfig};
use crate::tensor::TensorD;

/// Quasi-uniformity threshold on `max h / min h`.
pub const ASPECT_WARN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
}

/// What the discrete solution is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorReference {
    /// The exact solution and its gradient at the quadrature points.
    #[default]
    Exact,
    /// The multilinear interpolant of the exact solution.
    Interpolant,
    /// `L²` part against the exact solution, gradient part against the
    /// gradient of the interpolant. Picks up the nodal superconvergence of
    /// multilinear elements in the `H¹` column.
    InterpolantGradient,
}

/// `‖u_h − u‖₀` and `‖u_h − u‖₁` against the exact solution, 3-point Gauss per axis.
pub fn error_norms(u: &TensorD, mesh: &TensorMesh, problem: &Problem, t: f64) -> Result<ErrorNorms> {
    error_norms_with(u, mesh, problem, t, ErrorReference::Exact, &GaussRule::new(3))
}

pub fn error_norms_with(
    u: &TensorD,
    mesh: &TensorMesh,
    problem: &Problem,
    t: f64,
    reference: ErrorReference,
    rule: &GaussRule,
) -> Result<ErrorNorms> {
    u.require_shape(&mesh.dof_shape())?;
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| EifeError::Config(format!("problem '{}' has no exact solution", problem.name)))?;
    let uh = FullField::from_unknowns(u, mesh, |x| problem.boundary_value(t, x));
    let (l2sq, h1sq) = match reference {
        ErrorReference::Exact => {
            let l2 = integrate(mesh, &uh, rule, |p| (p.u - exact(t, p.x)).powi(2));
            let semi = integrate(mesh, &uh, rule, |p| {
                let mut g = [0.0; 3];
                problem.exact_gradient(t, p.x, &mut g[..p.x.len()]);
                p.grad.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum()
            });
            (l2, l2 + semi)
        }
        ErrorReference::Interpolant | ErrorReference::InterpolantGradient => {
            let mut diff = uh.clone();
            let parts = mesh.partitions();
            let mut idx = vec![0usize; diff.shape.len()];
            let mut x = vec![0.0; idx.len()];
            for v in diff.values.iter_mut() {
                for (a, p) in parts.iter().enumerate() {
                    x[a] = p.node(idx[a]);
                }
                *v -= exact(t, &x);
                crate::tensor::increment(&mut idx, &diff.shape);
            }
            let l2 = if reference == ErrorReference::Interpolant {
                integrate(mesh, &diff, rule, |p| p.u * p.u)
            } else {
                integrate(mesh, &uh, rule, |p| (p.u - exact(t, p.x)).powi(2))
            };
            let semi = integrate(mesh, &diff, rule, |p| p.grad.iter().map(|g| g * g).sum());
            (l2, l2 + semi)
        }
    };
    Ok(ErrorNorms {
        l2: l2sq.sqrt(),
        h1: h1sq.sqrt(),
    })
}

/// Bulk and gradient parts of the Flory–Huggins energy of the interpolant.
pub fn energy_terms(u: &TensorD, mesh: &TensorMesh, params: &EnergyParams) -> Result<(f64, f64)> {
    u.require_shape(&mesh.dof_shape())?;
    if let Some(&bad) = u.data().iter().find(|v| !(v.abs() < 1.0)) {
        return Err(EifeError::Domain {
            value: bad,
            t: f64::NAN,
            step: None,
        });
    }
    let field = FullField::from_unknowns(u, mesh, |_| 0.0);
    let rule = GaussRule::new(3);
    let EnergyParams { eps, theta, theta_c } = *params;
    let bulk = integrate(mesh, &field, &rule, |p| {
        let v = p.u;
        0.5 * theta * ((1.0 + v) * v.ln_1p() + (1.0 - v) * (-v).ln_1p()) - 0.5 * theta_c * v * v
    });
    // Gauss 3 is exact on |∇u_h|², so the closed form gives the same value
    let grad = 0.5 * eps * eps * gradient_seminorm_sq(&field, mesh)?;
    Ok((bulk, grad))
}

/// Flory–Huggins free energy of the multilinear interpolant of `u`.
pub fn discrete_energy(u: &TensorD, mesh: &TensorMesh, params: &EnergyParams) -> Result<f64> {
    let (bulk, grad) = energy_terms(u, mesh, params)?;
    Ok(bulk + grad)
}

/// `∫ |∇u_h|²` over the full nodal grid, as `Σ_a ⟨U, (K_a ⊗ Π_{b≠a} M_b) U⟩`
/// with the 1D element matrices of each axis.
fn gradient_seminorm_sq(field: &FullField, mesh: &TensorMesh) -> Result<f64> {
    let u = TensorD::new(field.shape.clone(), field.values.clone())?;
    let h = mesh.spacing();
    let d = h.len();
    let tridiag = |t: &TensorD, axis: usize, diag: f64, off: f64| {
        t.apply_along_axis(axis, move |buf, count| {
            let n = buf.len() / count;
            let mut line = vec![0.0; n];
            for chunk in buf.chunks_mut(n).take(count) {
                for j in 0..n {
                    let end = j == 0 || j + 1 == n;
                    let mut v = if end { 0.5 * diag } else { diag } * chunk[j];
                    if j > 0 {
                        v += off * chunk[j - 1];
                    }
                    if j + 1 < n {
                        v += off * chunk[j + 1];
                    }
                    line[j] = v;
                }
                chunk.copy_from_slice(&line);
            }
        })
    };
    let mut total = 0.0;
    for a in 0..d {
        let mut w = u.clone();
        for (b, &hb) in h.iter().enumerate() {
            w = if a == b {
                tridiag(&w, b, 2.0 / hb, -1.0 / hb)
            } else {
                tridiag(&w, b, 2.0 * hb / 3.0, hb / 6.0)
            };
        }
        total += u.data().iter().zip(w.data()).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(total)
}

/// Energy with the potential summed over the unknowns with weight `Π h` and
/// the exact gradient term of the interpolant. This is the functional whose
/// mass-weighted gradient flow the semi-discrete system with lumped load is.
pub fn nodal_energy(u: &TensorD, mesh: &TensorMesh, params: &EnergyParams) -> Result<f64> {
    u.require_shape(&mesh.dof_shape())?;
    if let Some(&bad) = u.data().iter().find(|v| !(v.abs() < 1.0)) {
        return Err(EifeError::Domain {
            value: bad,
            t: f64::NAN,
            step: None,
        });
    }
    let EnergyParams { eps, theta, theta_c } = *params;
    let cell: f64 = mesh.spacing().iter().product();
    let bulk: f64 = u
        .data()
        .iter()
        .map(|&v| 0.5 * theta * ((1.0 + v) * v.ln_1p() + (1.0 - v) * (-v).ln_1p()) - 0.5 * theta_c * v * v)
        .sum::<f64>()
        * cell;
    let field = FullField::from_unknowns(u, mesh, |_| 0.0);
    Ok(bulk + 0.5 * eps * eps * gradient_seminorm_sq(&field, mesh)?)
}

pub fn sup_norm(u: &TensorD) -> f64 {
    u.max_abs()
}

/// `log₂(e_coarse / e_fine)`.
pub fn convergence_rate(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

/// `log(t₂/t₁) / log(n₂/n₁)`: 1 for cost linear in the node count.
pub fn growth_factor(t1: f64, t2: f64, nodes1: usize, nodes2: usize) -> f64 {
    (t2 / t1).ln() / (nodes2 as f64 / nodes1 as f64).ln()
}

/// Warnings for meshes outside the quasi-uniform regime the theory assumes.
pub fn mesh_warnings(mesh: &TensorMesh) -> Vec<String> {
    let ratio = mesh.aspect_ratio();
    if ratio > ASPECT_WARN {
        vec![format!(
            "mesh {} has aspect ratio {ratio:.3} > {ASPECT_WARN}; error estimates assume quasi-uniform spacing",
            mesh.describe()
        )]
    } else {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub nt: usize,
    pub resolution: String,
    pub err_l2: Option<f64>,
    pub cr_l2: Option<f64>,
    pub err_h1: Option<f64>,
    pub cr_h1: Option<f64>,
    pub sec_per_step: Option<f64>,
    pub growth: Option<f64>,
}

impl StudyRow {
    pub fn new(nt: usize, resolution: impl Into<String>) -> Self {
        StudyRow {
            nt,
            resolution: resolution.into(),
            err_l2: None,
            cr_l2: None,
            err_h1: None,
            cr_h1: None,
            sec_per_step: None,
            growth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub scheme: String,
    pub problem: String,
    pub started: SystemTime,
    pub finished: SystemTime,
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    /// Fills the rate columns from consecutive error pairs.
    fn fill_rates(&mut self) {
        for i in 1..self.rows.len() {
            let (prev, cur) = (self.rows[i - 1].clone(), &mut self.rows[i]);
            cur.cr_l2 = prev.err_l2.zip(cur.err_l2).map(|(a, b)| convergence_rate(a, b));
            cur.cr_h1 = prev.err_h1.zip(cur.err_h1).map(|(a, b)| convergence_rate(a, b));
        }
    }
}

/// One rung of a refinement ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rung {
    pub n: Vec<usize>,
    pub n_steps: usize,
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub problem: Problem,
    pub scheme: Scheme,
    pub t_end: f64,
    pub rungs: Vec<Rung>,
    pub reference: ErrorReference,
    pub load: LoadModel,
    pub initial: InitialMode,
    /// Run rungs concurrently (convergence studies only).
    pub parallel: bool,
}

impl StudySpec {
    /// Spatial ladder: `n0 · 2^k` per axis at fixed `N_T`.
    pub fn spatial(problem: Problem, scheme: Scheme, n0: &[usize], levels: usize, n_steps: usize) -> Self {
        let rungs = (0..levels)
            .map(|k| Rung {
                n: n0.iter().map(|&n| n << k).collect(),
                n_steps,
            })
            .collect();
        StudySpec::with_rungs(problem, scheme, rungs)
    }

    /// Temporal ladder: `N_T = nt0 · 2^k` on a fixed mesh.
    pub fn temporal(problem: Problem, scheme: Scheme, n: &[usize], nt0: usize, levels: usize) -> Self {
        let rungs = (0..levels)
            .map(|k| Rung {
                n: n.to_vec(),
                n_steps: nt0 << k,
            })
            .collect();
        StudySpec::with_rungs(problem, scheme, rungs)
    }

    pub fn with_rungs(problem: Problem, scheme: Scheme, rungs: Vec<Rung>) -> Self {
        StudySpec {
            t_end: problem.t_end,
            problem,
            scheme,
            rungs,
            reference: ErrorReference::InterpolantGradient,
            load: LoadModel::default(),
            initial: InitialMode::default(),
            parallel: false,
        }
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            observe_every: usize::MAX,
            load: self.load,
            initial: self.initial,
        }
    }

    fn mesh(&self, rung: &Rung) -> Result<TensorMesh> {
        TensorMesh::uniform(&self.problem.domain, &rung.n, self.problem.boundary_kind())
    }
}

fn empty_report(spec: &StudySpec) -> StudyReport {
    let now = SystemTime::now();
    StudyReport {
        scheme: spec.scheme.name().to_string(),
        problem: spec.problem.name.clone(),
        started: now,
        finished: now,
        rows: Vec::new(),
    }
}

/// Runs every rung to `T` and tabulates errors and consecutive rates.
pub fn convergence_study(spec: &StudySpec) -> Result<StudyReport> {
    let mut report = empty_report(spec);
    let run_rung = |rung: &Rung| -> Result<StudyRow> {
        let mesh = spec.mesh(rung)?;
        let cfg = SchemeConfig::with_steps(spec.scheme, rung.n_steps, spec.t_end)?;
        let out = run(&spec.problem, &mesh, &cfg, &spec.options(), &mut [])?;
        let e = error_norms_with(
            &out.nodal,
            &mesh,
            &spec.problem,
            spec.t_end,
            spec.reference,
            &GaussRule::new(3),
        )?;
        let mut row = StudyRow::new(rung.n_steps, mesh.describe());
        row.err_l2 = Some(e.l2);
        row.err_h1 = Some(e.h1);
        Ok(row)
    };
    report.rows = if spec.parallel {
        spec.rungs.par_iter().map(run_rung).collect::<Result<_>>()?
    } else {
        spec.rungs.iter().map(run_rung).collect::<Result<_>>()?
    };
    report.fill_rates();
    report.finished = SystemTime::now();
    Ok(report)
}

/// Average wall-clock seconds per step (first step excluded) and growth
/// factors against the number of mesh nodes. Rungs run one at a time.
pub fn timing_study(spec: &StudySpec) -> Result<StudyReport> {
    let mut report = empty_report(spec);
    let mut prev: Option<(f64, usize)> = None;
    for rung in &spec.rungs {
        let mesh = spec.mesh(rung)?;
        let cfg = SchemeConfig::with_steps(spec.scheme, rung.n_steps, spec.t_end)?;
        let out = run(&spec.problem, &mesh, &cfg, &spec.options(), &mut [])?;
        let timed = if out.step_seconds.len() > 1 {
            &out.step_seconds[1..]
        } else {
            &out.step_seconds[..]
        };
        let mut row = StudyRow::new(rung.n_steps, mesh.describe());
        if !timed.is_empty() {
            let avg = timed.iter().sum::<f64>() / timed.len() as f64;
            let nodes: usize = rung.n.iter().map(|n| n + 1).product();
            row.sec_per_step = Some(avg);
            row.growth = prev.map(|(t1, n1)| growth_factor(t1, avg, n1, nodes));
            prev = Some((avg, nodes));
        }
        report.rows.push(row);
    }
    report.finished = SystemTime::now();
    Ok(report)
}
