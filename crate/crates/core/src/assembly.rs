//! Turns problem data into tensors: initial state, the transformed load
//! `G̃(t, U)` and the boundary lifting for Dirichlet data.
//!
//! Two load models are provided. [`LoadModel::Lumped`] takes
//! `F_i = (f(t, x_i, U_i), φ_i) = f_i ∫φ_i`, so `G̃ = Πh Ĥ ⊙ P(f_nodal)`.
//! [`LoadModel::Interpolated`] uses the interpolant of `f` on all nodes, so
//! the load is `M f_nodal` and `Ĥ ⊙ P(M f_nodal)` collapses to `P(f_nodal)`.
//! Known boundary values enter through a correction `C(t)` on the
//! boundary-adjacent layer: for every boundary neighbour `b` of an unknown,
//! `C += −M_ib ġ_b − D K_ib g_b`, plus `M_ib f(t, g_b)` for the interpolated model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{EifeError, Result};
use crate::mesh::{BoundaryKind, TensorMesh};
use crate::operator::DiagonalizedOperator;
use crate::problems::{InitialData, Problem};
use crate::quadrature::{assemble_load, GaussRule};
use crate::tensor::{unravel, TensorD};
use crate::transforms::Transformer;

pub use crate::oracle::dense_semidiscrete_rhs;

const EVAL_CHUNK: usize = 4096;

/// How the reaction term enters the Galerkin load vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadModel {
    /// Nodal value of `f` against each basis function: `F_i = f_i ∫φ_i`.
    #[default]
    Lumped,
    /// Multilinear interpolant of `f` over every node, boundary nodes included.
    Interpolated,
}

impl LoadModel {
    pub fn name(self) -> &'static str {
        match self {
            LoadModel::Lumped => "lumped",
            LoadModel::Interpolated => "interpolated",
        }
    }
}

/// Couplings between boundary-adjacent unknowns and the boundary nodes.
#[derive(Debug, Clone)]
pub struct BoundaryStencil {
    /// Coordinates of every boundary node that touches an unknown.
    nodes: Vec<Vec<f64>>,
    /// `(unknown, boundary node, mass coupling, stiffness coupling)`.
    couplings: Vec<(usize, usize, f64, f64)>,
}

impl BoundaryStencil {
    fn build(mesh: &TensorMesh) -> Self {
        let parts = mesh.partitions();
        let d = parts.len();
        let h = mesh.spacing();
        let dof = mesh.dof_shape();
        let strides = crate::tensor::strides(&dof);
        let full_shape: Vec<usize> = parts.iter().map(|p| p.n() + 1).collect();
        let full_strides = crate::tensor::strides(&full_shape);
        let mut node_ids = std::collections::BTreeMap::new();
        let mut nodes = Vec::new();
        let mut couplings = Vec::new();
        let mut idx = vec![0usize; d];
        let n_offsets = 3usize.pow(d as u32);
        for flat in 0..mesh.total_dofs() {
            unravel(flat, &dof, &mut idx);
            if idx.iter().zip(&dof).all(|(&i, &n)| i > 0 && i + 1 < n) {
                continue;
            }
            for o in 0..n_offsets {
                let mut rem = o;
                let mut full = vec![0usize; d];
                let mut delta = vec![0i64; d];
                for a in (0..d).rev() {
                    delta[a] = (rem % 3) as i64 - 1;
                    rem /= 3;
                    full[a] = (idx[a] as i64 + 1 + delta[a]) as usize;
                }
                if !full.iter().zip(parts).any(|(&j, p)| j == 0 || j == p.n()) {
                    continue;
                }
                let mass1 = |a: usize| if delta[a] == 0 { 4.0 * h[a] / 6.0 } else { h[a] / 6.0 };
                let stiff1 = |a: usize| if delta[a] == 0 { 2.0 / h[a] } else { -1.0 / h[a] };
                let mass: f64 = (0..d).map(mass1).product();
                let stiff: f64 = (0..d)
                    .map(|g| {
                        (0..d)
                            .map(|a| if a == g { stiff1(a) } else { mass1(a) })
                            .product::<f64>()
                    })
                    .sum();
                let key: usize = full.iter().zip(&full_strides).map(|(j, s)| j * s).sum();
                let id = *node_ids.entry(key).or_insert_with(|| {
                    nodes.push(full.iter().zip(parts).map(|(&j, p)| p.node(j)).collect());
                    nodes.len() - 1
                });
                let unknown: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                couplings.push((unknown, id, mass, stiff));
            }
        }
        BoundaryStencil { nodes, couplings }
    }

    pub fn num_boundary_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Nodal correction `C(t)`; the `M_ib f(t, g_b)` terms only when `with_reaction`.
    pub fn correction(&self, problem: &Problem, t: f64, shape: &[usize], with_reaction: bool) -> Result<TensorD> {
        let mut data = vec![0.0; shape.iter().product()];
        let per_node: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .map(|x| {
                let g = problem.boundary_value(t, x);
                let rate = problem.boundary_rate(t, x);
                let f = if with_reaction {
                    problem.reaction_checked(t, x, g)?
                } else {
                    0.0
                };
                Ok((f - rate, g))
            })
            .collect::<Result<_>>()?;
        let d = problem.diffusion;
        for &(unknown, id, mass, stiff) in &self.couplings {
            let (source, g) = per_node[id];
            data[unknown] += mass * source - d * stiff * g;
        }
        TensorD::new(shape.to_vec(), data)
    }
}

/// Everything needed to evaluate the transformed load of a problem on a mesh.
#[derive(Debug, Clone)]
pub struct LoadContext {
    problem: Problem,
    mesh: TensorMesh,
    op: DiagonalizedOperator,
    transformer: Transformer,
    model: LoadModel,
    /// `Πh Ĥ` for the lumped model.
    lumped_weight: Option<TensorD>,
    stencil: Option<BoundaryStencil>,
}

impl LoadContext {
    pub fn new(problem: &Problem, mesh: &TensorMesh) -> Result<Self> {
        Self::with_model(problem, mesh, LoadModel::default())
    }

    pub fn with_model(problem: &Problem, mesh: &TensorMesh, model: LoadModel) -> Result<Self> {
        check_compatible(problem, mesh)?;
        let op = DiagonalizedOperator::build(mesh, problem.diffusion)?;
        let needs_stencil = match model {
            LoadModel::Lumped => mesh.bc() == BoundaryKind::Dirichlet,
            LoadModel::Interpolated => mesh.bc() != BoundaryKind::Periodic,
        };
        let cell: f64 = mesh.spacing().iter().product();
        let lumped_weight = (model == LoadModel::Lumped).then(|| op.h_hat().scale(cell));
        Ok(LoadContext {
            problem: problem.clone(),
            mesh: mesh.clone(),
            op,
            transformer: Transformer::new(mesh),
            model,
            lumped_weight,
            stencil: needs_stencil.then(|| BoundaryStencil::build(mesh)),
        })
    }

    pub fn model(&self) -> LoadModel {
        self.model
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn mesh(&self) -> &TensorMesh {
        &self.mesh
    }

    pub fn operator(&self) -> &DiagonalizedOperator {
        &self.op
    }

    pub fn transformer(&self) -> &Transformer {
        &self.transformer
    }

    pub fn stencil(&self) -> Option<&BoundaryStencil> {
        self.stencil.as_ref()
    }

    /// `f(t, x, U)` at every unknown. On failure reports the first offending
    /// entry in row-major order.
    pub fn reaction_nodal(&self, t: f64, u: &TensorD) -> Result<TensorD> {
        u.require_shape(self.op.shape())?;
        let shape = u.shape().to_vec();
        let chunks: Vec<Result<Vec<f64>>> = u
            .data()
            .par_chunks(EVAL_CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut idx = vec![0usize; shape.len()];
                let mut x = vec![0.0; shape.len()];
                chunk
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        unravel(c * EVAL_CHUNK + i, &shape, &mut idx);
                        self.mesh.coords_into(&idx, &mut x);
                        self.problem.reaction_checked(t, &x, v)
                    })
                    .collect()
            })
            .collect();
        let mut data = Vec::with_capacity(u.len());
        for chunk in chunks {
            data.extend(chunk?);
        }
        TensorD::new(shape, data)
    }

    /// Boundary lifting correction `C(t)`; `None` when no boundary node
    /// contributes (periodic meshes, homogeneous data with the lumped model).
    pub fn boundary_correction(&self, t: f64) -> Result<Option<TensorD>> {
        let with_reaction = self.model == LoadModel::Interpolated;
        self.stencil
            .as_ref()
            .map(|s| s.correction(&self.problem, t, self.op.shape(), with_reaction))
            .transpose()
    }

    /// `G̃(t, U) = Ĥ ⊙ P(F(t, U)) + Ĥ ⊙ P(C(t))` for nodal `U`.
    pub fn transformed_load(&self, t: f64, u: &TensorD) -> Result<TensorD> {
        let f = self.reaction_nodal(t, u)?;
        let mut g = self.transformer.forward(&f)?;
        if let Some(w) = &self.lumped_weight {
            g = g.zip_map(w, |a, b| a * b)?;
        }
        if let Some(c) = self.boundary_correction(t)? {
            let c_tilde = self.transformer.forward(&c)?;
            g = g.zip_map(&c_tilde.zip_map(self.op.h_hat(), |a, b| a * b)?, |a, b| a + b)?;
        }
        Ok(g)
    }

    /// `dŨ/dt = −H ⊙ Ũ + G̃(t, U)` for nodal `U`, returned in nodal space.
    pub fn semidiscrete_rhs(&self, t: f64, u: &TensorD) -> Result<TensorD> {
        let u_tilde = self.transformer.forward(u)?;
        let g = self.transformed_load(t, u)?;
        let rhs = g.zip_map(&u_tilde.zip_map(self.op.h(), |a, b| a * b)?, |a, b| a - b)?;
        self.transformer.inverse(&rhs)
    }
}

/// Rejects meshes whose dimension or boundary kind disagrees with the problem.
pub fn check_compatible(problem: &Problem, mesh: &TensorMesh) -> Result<()> {
    if problem.ndim() != mesh.ndim() {
        return Err(EifeError::Config(format!(
            "problem '{}' is {}-dimensional but the mesh has {} axes",
            problem.name,
            problem.ndim(),
            mesh.ndim()
        )));
    }
    if problem.boundary_kind() != mesh.bc() {
        return Err(EifeError::Config(format!(
            "problem '{}' declares {:?} boundary conditions, mesh uses {:?}",
            problem.name,
            problem.boundary_kind(),
            mesh.bc()
        )));
    }
    Ok(())
}

/// How the initial datum is brought onto the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialMode {
    #[default]
    Interpolate,
    /// Discrete L² projection, see [`initial_state_projected`].
    Project,
}

pub fn initial_state_with(problem: &Problem, mesh: &TensorMesh, mode: InitialMode) -> Result<TensorD> {
    match mode {
        InitialMode::Interpolate => Ok(initial_state(problem, mesh)),
        InitialMode::Project => initial_state_projected(problem, mesh),
    }
}

/// Nodal interpolation of the initial datum (or the seeded random field).
pub fn initial_state(problem: &Problem, mesh: &TensorMesh) -> TensorD {
    let shape = mesh.dof_shape();
    match &problem.initial {
        InitialData::Function(u0) => {
            let mut x = vec![0.0; shape.len()];
            TensorD::from_fn(&shape, |idx| {
                mesh.coords_into(idx, &mut x);
                u0(&x)
            })
        }
        InitialData::Random { seed, low, high } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            TensorD::from_fn(&shape, |_| low + (high - low) * rng.random::<f64>())
        }
    }
}

/// Discrete L² projection of the initial datum onto the finite element space
/// (with the boundary values of `g(0, ·)` held fixed for Dirichlet data).
/// Random initial data is returned as sampled.
pub fn initial_state_projected(problem: &Problem, mesh: &TensorMesh) -> Result<TensorD> {
    let InitialData::Function(u0) = &problem.initial else {
        return Ok(initial_state(problem, mesh));
    };
    let ctx = LoadContext::with_model(problem, mesh, LoadModel::Interpolated)?;
    let load = assemble_load(mesh, &GaussRule::new(3), |x| u0(x));
    let parts = mesh.partitions();
    let shape = mesh.dof_shape();
    let full_strides = crate::tensor::strides(&load.shape);
    let mut b = TensorD::from_fn(&shape, |idx| match mesh.bc() {
        BoundaryKind::Periodic => {
            // fold the image nodes at index N onto node 0
            let d = idx.len();
            let mut sum = 0.0;
            for mask in 0..(1usize << d) {
                let mut flat = 0;
                let mut ok = true;
                for a in 0..d {
                    let bit = (mask >> a) & 1;
                    if bit == 1 && idx[a] != 0 {
                        ok = false;
                        break;
                    }
                    let j = if bit == 1 { parts[a].n() } else { idx[a] };
                    flat += j * full_strides[a];
                }
                if ok {
                    sum += load.values[flat];
                }
            }
            sum
        }
        _ => {
            let flat: usize = idx.iter().zip(&full_strides).map(|(i, s)| (i + 1) * s).sum();
            load.values[flat]
        }
    });
    if let Some(stencil) = ctx.stencil() {
        let data = b.data_mut();
        for &(unknown, id, mass, _) in &stencil.couplings {
            data[unknown] -= mass * problem.boundary_value(0.0, &stencil.nodes[id]);
        }
    }
    let tf = ctx.transformer();
    let modal = tf.forward(&b)?.zip_map(ctx.operator().h_hat(), |a, b| a * b)?;
    tf.inverse(&modal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{builtin_linear_rd, BoundaryData, FieldFn, InitialData};
    use crate::tensor::mode_multiply;
    use crate::transforms::build_axis_matrices;
    use std::sync::Arc;

    fn simple_problem(d: usize, boundary: BoundaryData, f: f64) -> Problem {
        Problem {
            name: "test".into(),
            diffusion: 1.0,
            reaction: Arc::new(move |_, _, _| f),
            reaction_du: None,
            boundary,
            initial: InitialData::Function(Arc::new(|_| 0.0)),
            exact: None,
            exact_grad: None,
            admissible: None,
            domain: vec![(0.0, 1.0); d],
            t_end: 1.0,
            energy: None,
        }
    }

    #[test]
    fn zero_reaction_gives_zero_load() {
        let p = simple_problem(2, BoundaryData::Homogeneous, 0.0);
        let mesh = TensorMesh::uniform(&p.domain, &[4, 5], BoundaryKind::HomogeneousDirichlet).unwrap();
        let ctx = LoadContext::new(&p, &mesh).unwrap();
        let g = ctx.transformed_load(0.0, &TensorD::zeros(&mesh.dof_shape())).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn collapsed_load_matches_mass_applied_form() {
        // f ≡ 1 on interior nodes only, so boundary f must not enter
        let mut p = simple_problem(1, BoundaryData::Homogeneous, 1.0);
        p.reaction = Arc::new(|_, x, _| if x[0] > 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 });
        for n in [2, 5, 8] {
            let mesh = TensorMesh::uniform(&p.domain, &[n], BoundaryKind::HomogeneousDirichlet).unwrap();
            let ctx = LoadContext::with_model(&p, &mesh, LoadModel::Interpolated).unwrap();
            let ones = TensorD::filled(&mesh.dof_shape(), 1.0);
            let g = ctx.transformed_load(0.0, &ones).unwrap();
            let (a, _) = build_axis_matrices(&mesh.partitions()[0], mesh.bc());
            let mass_applied = mode_multiply(&a, &ones, 0).unwrap();
            let dense = ctx
                .transformer()
                .forward(&mass_applied)
                .unwrap()
                .zip_map(ctx.operator().h_hat(), |x, y| x * y)
                .unwrap();
            for (x, y) in g.data().iter().zip(dense.data()) {
                assert!((x - y).abs() < 1e-13 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn lumped_load_scales_nodal_values() {
        let p = simple_problem(2, BoundaryData::Homogeneous, 2.0);
        let mesh = TensorMesh::uniform(&p.domain, &[4, 5], BoundaryKind::HomogeneousDirichlet).unwrap();
        let ctx = LoadContext::new(&p, &mesh).unwrap();
        assert_eq!(ctx.model(), LoadModel::Lumped);
        let u = TensorD::zeros(&mesh.dof_shape());
        let g = ctx.transformed_load(0.0, &u).unwrap();
        // dense: Ĥ ⊙ P(F) with F = 2 h_x h_y everywhere
        let f = TensorD::filled(&mesh.dof_shape(), 2.0 * 0.25 * 0.2);
        let expect = ctx
            .transformer()
            .forward(&f)
            .unwrap()
            .zip_map(ctx.operator().h_hat(), |a, b| a * b)
            .unwrap();
        for (a, b) in g.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-13 * b.abs().max(1.0));
        }
    }

    #[test]
    fn boundary_correction_1d() {
        let g: FieldFn = Arc::new(|_, x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let zero: FieldFn = Arc::new(|_, _| 0.0);
        let p = simple_problem(1, BoundaryData::Dirichlet { g, g_dot: Some(zero) }, 0.0);
        let mesh = TensorMesh::uniform(&p.domain, &[4], BoundaryKind::Dirichlet).unwrap();
        let ctx = LoadContext::new(&p, &mesh).unwrap();
        let c = ctx.boundary_correction(0.0).unwrap().unwrap();
        assert_eq!(c.data().len(), 3);
        assert!((c.data()[0] - 4.0).abs() < 1e-14);
        assert_eq!(&c.data()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn periodic_constant_load_hits_only_zero_mode() {
        let p = simple_problem(2, BoundaryData::Periodic, 2.5);
        let mesh = TensorMesh::uniform(&p.domain, &[6, 4], BoundaryKind::Periodic).unwrap();
        let ctx = LoadContext::new(&p, &mesh).unwrap();
        let g = ctx.transformed_load(0.0, &TensorD::zeros(&mesh.dof_shape())).unwrap();
        assert!((g.data()[0] - 2.5 * 24.0).abs() < 1e-12);
        assert!(g.data()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn initial_state_examples() {
        let p = builtin_linear_rd();
        let mesh = TensorMesh::uniform(&p.domain, &[4, 4], BoundaryKind::HomogeneousDirichlet).unwrap();
        let u = initial_state(&p, &mesh);
        // node (1, 0.5) is unknown (0, 1)
        assert_eq!(mesh.node_coordinates(&[0, 1]).unwrap(), vec![1.0, 0.5]);
        assert!((u.get(&[0, 1]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_fixes_finite_element_members() {
        // multilinear data with boundary values taken from the same function
        let lin: FieldFn = Arc::new(|_, x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        let l2 = lin.clone();
        let mut p = simple_problem(2, BoundaryData::Dirichlet { g: lin, g_dot: None }, 0.0);
        p.initial = InitialData::Function(Arc::new(move |x| l2(0.0, x)));
        let mesh = TensorMesh::uniform(&p.domain, &[5, 3], BoundaryKind::Dirichlet).unwrap();
        let interp = initial_state(&p, &mesh);
        let proj = initial_state_projected(&p, &mesh).unwrap();
        for (a, b) in interp.data().iter().zip(proj.data()) {
            assert!((a - b).abs() < 1e-11 * a.abs().max(1.0));
        }
        // periodic: a constant is a member
        let mut q = simple_problem(2, BoundaryData::Periodic, 0.0);
        q.initial = InitialData::Function(Arc::new(|_| 0.75));
        let mesh = TensorMesh::uniform(&q.domain, &[4, 6], BoundaryKind::Periodic).unwrap();
        let proj = initial_state_projected(&q, &mesh).unwrap();
        assert!(proj.data().iter().all(|v| (v - 0.75).abs() < 1e-12));
    }

    #[test]
    fn random_initial_data_is_seeded() {
        let p = crate::problems::builtin_flory_huggins(0.01, 0.8, 1.6, 42).unwrap();
        let mesh = TensorMesh::uniform(&p.domain, &[8, 8, 8], BoundaryKind::Periodic).unwrap();
        let a = initial_state(&p, &mesh);
        let b = initial_state(&p, &mesh);
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| v.abs() <= 0.9));
        let q = crate::problems::builtin_flory_huggins(0.01, 0.8, 1.6, 43).unwrap();
        assert_ne!(initial_state(&q, &mesh), a);
    }

    #[test]
    fn incompatible_boundary_is_rejected() {
        let p = builtin_linear_rd();
        let mesh = TensorMesh::uniform(&p.domain, &[4, 4], BoundaryKind::Periodic).unwrap();
        assert!(matches!(LoadContext::new(&p, &mesh), Err(EifeError::Config(_))));
    }
}
