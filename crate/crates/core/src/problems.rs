//! PDE data for `u_t = DΔu + f(t, x, u)` on a rectangle: the three built-in
//! experiments and expression-defined custom problems.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::error::{EifeError, Result};
use crate::expr::Expr;
use crate::mesh::BoundaryKind;

/// Reaction term `f(t, x, u)`.
pub type ReactionFn = Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;
/// Space-time field `(t, x) -> value`.
pub type FieldFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
/// Gradient of a space-time field, written into the output slice.
pub type GradFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryData {
    Homogeneous,
    /// Nonhomogeneous Dirichlet data `g(t, x)` with optional analytic `∂g/∂t`.
    Dirichlet {
        g: FieldFn,
        g_dot: Option<FieldFn>,
    },
    Periodic,
}

impl BoundaryData {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryData::Homogeneous => BoundaryKind::HomogeneousDirichlet,
            BoundaryData::Dirichlet { .. } => BoundaryKind::Dirichlet,
            BoundaryData::Periodic => BoundaryKind::Periodic,
        }
    }
}

#[derive(Clone)]
pub enum InitialData {
    Function(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
    /// Independent uniform samples in `[low, high]` at every owned node,
    /// drawn in row-major node order from a ChaCha8 stream seeded with `seed`.
    Random {
        seed: u64,
        low: f64,
        high: f64,
    },
}

/// Parameters of the Flory–Huggins free energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub eps: f64,
    pub theta: f64,
    pub theta_c: f64,
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub diffusion: f64,
    pub reaction: ReactionFn,
    pub reaction_du: Option<ReactionFn>,
    pub boundary: BoundaryData,
    pub initial: InitialData,
    pub exact: Option<FieldFn>,
    pub exact_grad: Option<GradFn>,
    /// Open interval outside which `f` is undefined.
    pub admissible: Option<(f64, f64)>,
    pub domain: Vec<(f64, f64)>,
    pub t_end: f64,
    pub energy: Option<EnergyParams>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("diffusion", &self.diffusion)
            .field("boundary", &self.boundary.kind())
            .field("domain", &self.domain)
            .field("t_end", &self.t_end)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn boundary_kind(&self) -> BoundaryKind {
        self.boundary.kind()
    }

    pub fn ndim(&self) -> usize {
        self.domain.len()
    }

    /// `f(t, x, u)`, rejecting states outside the admissible interval.
    #[inline]
    pub fn reaction_checked(&self, t: f64, x: &[f64], u: f64) -> Result<f64> {
        if let Some((lo, hi)) = self.admissible {
            if !(u > lo && u < hi) {
                return Err(EifeError::Domain {
                    value: u,
                    t,
                    step: None,
                });
            }
        }
        let v = (self.reaction)(t, x, u);
        if !v.is_finite() {
            return Err(EifeError::Domain {
                value: u,
                t,
                step: None,
            });
        }
        Ok(v)
    }

    /// Boundary value at `(t, x)`; zero for homogeneous data.
    pub fn boundary_value(&self, t: f64, x: &[f64]) -> f64 {
        match &self.boundary {
            BoundaryData::Dirichlet { g, .. } => g(t, x),
            _ => 0.0,
        }
    }

    /// `∂g/∂t`, analytic when available, else a centered difference with
    /// step `1e-6·max(1, |t|)`.
    pub fn boundary_rate(&self, t: f64, x: &[f64]) -> f64 {
        match &self.boundary {
            BoundaryData::Dirichlet { g_dot: Some(gd), .. } => gd(t, x),
            BoundaryData::Dirichlet { g, .. } => {
                let d = 1e-6 * t.abs().max(1.0);
                (g(t + d, x) - g(t - d, x)) / (2.0 * d)
            }
            _ => 0.0,
        }
    }

    /// Gradient of the exact solution, analytic when supplied, else by
    /// central differences.
    pub fn exact_gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        if let Some(grad) = &self.exact_grad {
            return grad(t, x, out);
        }
        let exact = self.exact.as_ref().expect("exact solution required");
        let mut p = x.to_vec();
        for a in 0..x.len() {
            let d = 1e-6 * x[a].abs().max(1.0);
            p[a] = x[a] + d;
            let fp = exact(t, &p);
            p[a] = x[a] - d;
            let fm = exact(t, &p);
            p[a] = x[a];
            out[a] = (fp - fm) / (2.0 * d);
        }
    }
}

/// Two-dimensional linear reaction–diffusion problem with a manufactured
/// solution `e^{-π²t}(sin πx − 1) sin πy` on `(1/2, 5/2) × (0, 1)`.
pub fn builtin_linear_rd() -> Problem {
    let pi2 = PI * PI;
    let exact: FieldFn = Arc::new(move |t, x| (-pi2 * t).exp() * ((PI * x[0]).sin() - 1.0) * (PI * x[1]).sin());
    let exact_grad: GradFn = Arc::new(move |t, x, g| {
        let e = (-pi2 * t).exp();
        g[0] = e * PI * (PI * x[0]).cos() * (PI * x[1]).sin();
        g[1] = e * ((PI * x[0]).sin() - 1.0) * PI * (PI * x[1]).cos();
    });
    Problem {
        name: "linear_rd".into(),
        diffusion: 0.5,
        reaction: Arc::new(move |t, x, u| {
            -0.5 * pi2 * u + 0.5 * pi2 * (-pi2 * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin()
        }),
        reaction_du: Some(Arc::new(move |_, _, _| -0.5 * pi2)),
        boundary: BoundaryData::Homogeneous,
        initial: InitialData::Function(Arc::new(|x| ((PI * x[0]).sin() - 1.0) * (PI * x[1]).sin())),
        exact: Some(exact),
        exact_grad: Some(exact_grad),
        admissible: None,
        domain: vec![(0.5, 2.5), (0.0, 1.0)],
        t_end: 1.0,
        energy: None,
    }
}

/// Allen–Cahn traveling wave `½(1 − tanh((x − st)/(2√2ε)))`, `s = 3/(√2ε)`,
/// on `(0, √2) × (0, 1/8)²` with Dirichlet data taken from the exact solution.
pub fn builtin_allen_cahn_wave(eps: f64) -> Result<Problem> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(EifeError::Config(format!("eps must be positive, got {eps}")));
    }
    let speed = 3.0 / (SQRT_2 * eps);
    let width = 2.0 * SQRT_2 * eps;
    let exact: FieldFn = Arc::new(move |t, x| 0.5 * (1.0 - ((x[0] - speed * t) / width).tanh()));
    let g_dot: FieldFn = Arc::new(move |t, x| {
        let sech2 = 1.0 - ((x[0] - speed * t) / width).tanh().powi(2);
        0.5 * sech2 * speed / width
    });
    let exact_grad: GradFn = Arc::new(move |t, x, g| {
        let sech2 = 1.0 - ((x[0] - speed * t) / width).tanh().powi(2);
        g[0] = -0.5 * sech2 / width;
        for v in g.iter_mut().skip(1) {
            *v = 0.0;
        }
    });
    let e0 = exact.clone();
    let inv_eps2 = 1.0 / (eps * eps);
    Ok(Problem {
        name: "allen_cahn_wave".into(),
        diffusion: 1.0,
        reaction: Arc::new(move |_, _, u| -(u * u * u - u) * inv_eps2),
        reaction_du: Some(Arc::new(move |_, _, u| -(3.0 * u * u - 1.0) * inv_eps2)),
        boundary: BoundaryData::Dirichlet {
            g: exact.clone(),
            g_dot: Some(g_dot),
        },
        initial: InitialData::Function(Arc::new(move |x| e0(0.0, x))),
        exact: Some(exact),
        exact_grad: Some(exact_grad),
        admissible: None,
        domain: vec![(0.0, SQRT_2), (0.0, 0.125), (0.0, 0.125)],
        t_end: 3.0 * SQRT_2 * eps / 5.0,
        energy: None,
    })
}

/// Flory–Huggins Allen–Cahn grain coarsening on the periodic unit cube,
/// started from seeded uniform noise in `[-0.9, 0.9]`.
pub fn builtin_flory_huggins(eps: f64, theta: f64, theta_c: f64, seed: u64) -> Result<Problem> {
    if !(eps > 0.0 && theta > 0.0 && theta_c.is_finite()) {
        return Err(EifeError::Config(format!(
            "invalid Flory-Huggins parameters eps={eps}, theta={theta}, theta_c={theta_c}"
        )));
    }
    Ok(Problem {
        name: "flory_huggins".into(),
        diffusion: eps * eps,
        reaction: Arc::new(move |_, _, u| flory_huggins_reaction(u, theta, theta_c)),
        reaction_du: Some(Arc::new(move |_, _, u| -theta / (1.0 - u * u) + theta_c)),
        boundary: BoundaryData::Periodic,
        initial: InitialData::Random {
            seed,
            low: -0.9,
            high: 0.9,
        },
        exact: None,
        exact_grad: None,
        admissible: Some((-1.0, 1.0)),
        domain: vec![(0.0, 1.0); 3],
        t_end: 20.0,
        energy: Some(EnergyParams { eps, theta, theta_c }),
    })
}

pub fn flory_huggins_reaction(u: f64, theta: f64, theta_c: f64) -> f64 {
    0.5 * theta * ((1.0 - u) / (1.0 + u)).ln() + theta_c * u
}

/// Textual definition of a custom problem.
#[derive(Debug, Clone, Default)]
pub struct CustomSpec {
    pub diffusion: f64,
    pub reaction: String,
    pub initial: String,
    pub exact: Option<String>,
    /// Boundary trace; defaults to `exact` for nonhomogeneous Dirichlet.
    pub boundary: Option<String>,
    pub boundary_rate: Option<String>,
    pub bc: Option<BoundaryKind>,
    pub domain: Vec<(f64, f64)>,
    pub t_end: f64,
    pub admissible: Option<(f64, f64)>,
}

pub fn custom_problem(spec: &CustomSpec) -> Result<Problem> {
    if spec.domain.is_empty() || spec.domain.len() > 3 {
        return Err(EifeError::Config("custom problem needs 1 to 3 domain axes".into()));
    }
    let field = |e: Expr| -> FieldFn { Arc::new(move |t, x| e.eval(t, x, 0.0)) };
    let reaction = Expr::parse(&spec.reaction)?;
    let initial = Expr::parse(&spec.initial)?;
    let exact = spec.exact.as_deref().map(Expr::parse).transpose()?;
    let bc = spec.bc.unwrap_or(BoundaryKind::HomogeneousDirichlet);
    let boundary = match bc {
        BoundaryKind::HomogeneousDirichlet => BoundaryData::Homogeneous,
        BoundaryKind::Periodic => BoundaryData::Periodic,
        BoundaryKind::Dirichlet => {
            let g = match (&spec.boundary, &exact) {
                (Some(src), _) => Expr::parse(src)?,
                (None, Some(e)) => e.clone(),
                (None, None) => {
                    return Err(EifeError::Config(
                        "dirichlet boundary needs 'boundary' or 'exact'".into(),
                    ))
                }
            };
            let g_dot = spec.boundary_rate.as_deref().map(Expr::parse).transpose()?;
            BoundaryData::Dirichlet {
                g: field(g),
                g_dot: g_dot.map(field),
            }
        }
    };
    Ok(Problem {
        name: "custom".into(),
        diffusion: spec.diffusion,
        reaction: Arc::new(move |t, x, u| reaction.eval(t, x, u)),
        reaction_du: None,
        boundary,
        initial: InitialData::Function(Arc::new(move |x| initial.eval(0.0, x, 0.0))),
        exact: exact.map(field),
        exact_grad: None,
        admissible: spec.admissible,
        domain: spec.domain.clone(),
        t_end: spec.t_end,
        energy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// u_t − DΔu − f via central differences of the exact solution.
    fn residual(p: &Problem, t: f64, x: &[f64]) -> f64 {
        let exact = p.exact.as_ref().unwrap();
        let dt = 1e-5;
        let ut = (exact(t + dt, x) - exact(t - dt, x)) / (2.0 * dt);
        let dx = 1e-4;
        let mut lap = 0.0;
        let mut q = x.to_vec();
        for a in 0..x.len() {
            q[a] = x[a] + dx;
            let fp = exact(t, &q);
            q[a] = x[a] - dx;
            let fm = exact(t, &q);
            q[a] = x[a];
            lap += (fp - 2.0 * exact(t, x) + fm) / (dx * dx);
        }
        ut - p.diffusion * lap - (p.reaction)(t, x, exact(t, x))
    }

    #[test]
    fn linear_rd_data() {
        let p = builtin_linear_rd();
        let exact = p.exact.as_ref().unwrap();
        let InitialData::Function(u0) = &p.initial else {
            panic!()
        };
        for &(x, y) in &[(0.7, 0.2), (1.2, 0.4), (2.4, 0.9)] {
            assert!((exact(0.0, &[x, y]) - u0(&[x, y])).abs() < 1e-15);
            assert!(exact(0.3, &[x, 0.0]).abs() < 1e-15);
            assert!(exact(0.3, &[x, 1.0]).abs() < 1e-15);
        }
        assert!((u0(&[1.0, 0.5]) + 1.0).abs() < 1e-15);
        // residual is relative to |u_t| ~ π²|u|
        assert!(residual(&p, 0.3, &[1.2, 0.4]).abs() < 1e-8);
    }

    #[test]
    fn allen_cahn_wave_data() {
        let p = builtin_allen_cahn_wave(0.05).unwrap();
        let exact = p.exact.as_ref().unwrap();
        assert_eq!(exact(0.0, &[0.0, 0.03, 0.1]), 0.5);
        let s = 3.0 / (SQRT_2 * 0.05);
        let t = p.t_end;
        for &x in &[0.1, 0.3, 0.7] {
            assert!((exact(t, &[x + s * t, 0.0, 0.0]) - exact(0.0, &[x, 0.0, 0.0])).abs() < 1e-12);
        }
        assert!(residual(&p, 0.01, &[0.25, 0.05, 0.05]).abs() < 1e-3);
        assert!(builtin_allen_cahn_wave(0.0).is_err());
        // analytic g_dot matches a difference quotient
        let x = [0.2, 0.0, 0.0];
        let gd = p.boundary_rate(0.01, &x);
        let d = 1e-7;
        let fd = (exact(0.01 + d, &x) - exact(0.01 - d, &x)) / (2.0 * d);
        assert!((gd - fd).abs() < 1e-5 * gd.abs().max(1.0));
    }

    #[test]
    fn flory_huggins_reaction_values() {
        assert_eq!(flory_huggins_reaction(0.0, 0.8, 1.6), 0.0);
        let v = flory_huggins_reaction(0.5, 0.8, 1.6);
        assert!((v - 0.3605551).abs() < 1e-7);
        for &u in &[0.1, 0.5, 0.93, 0.999] {
            let a = flory_huggins_reaction(u, 0.8, 1.6);
            let b = flory_huggins_reaction(-u, 0.8, 1.6);
            assert!((a + b).abs() < 1e-13);
        }
        let p = builtin_flory_huggins(0.01, 0.8, 1.6, 7).unwrap();
        assert!(matches!(
            p.reaction_checked(0.0, &[0.0; 3], 1.0),
            Err(EifeError::Domain { value, .. }) if value == 1.0
        ));
        assert!(p.reaction_checked(0.0, &[0.0; 3], 0.95).is_ok());
    }

    #[test]
    fn custom_problem_from_expressions() {
        let spec = CustomSpec {
            diffusion: 1.0,
            reaction: "-(u^3 - u)/0.0025".into(),
            initial: "0.5*(1 - tanh(x/(2*sqrt(2)*0.05)))".into(),
            exact: Some("0.5*(1 - tanh((x - 3/(sqrt(2)*0.05)*t)/(2*sqrt(2)*0.05)))".into()),
            bc: Some(BoundaryKind::Dirichlet),
            domain: vec![(0.0, SQRT_2)],
            t_end: 0.01,
            ..Default::default()
        };
        let p = custom_problem(&spec).unwrap();
        let b = builtin_allen_cahn_wave(0.05).unwrap();
        let x = [0.3];
        assert!(((p.reaction)(0.0, &x, 0.3) - (b.reaction)(0.0, &x, 0.3)).abs() < 1e-10);
        assert!((p.boundary_value(0.004, &x) - b.boundary_value(0.004, &[0.3, 0.0, 0.0])).abs() < 1e-14);
        assert!((p.boundary_rate(0.004, &x) - b.boundary_rate(0.004, &[0.3, 0.0, 0.0])).abs() < 1e-4);
    }
}
