//! Dense reference realization of the semi-discrete system.
//!
//! Assembles the full mass and stiffness matrices from Kronecker products of
//! the 1D element matrices, eliminates known boundary values row by row, and
//! evaluates matrix functions through a dense symmetric eigendecomposition.
//! Meant for small meshes in tests; shares no code with the fast path beyond
//! the problem data.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::assembly::LoadModel;
use crate::error::{EifeError, Result};
use crate::mesh::{BoundaryKind, Partition1D, TensorMesh};
use crate::operator::phi;
use crate::problems::Problem;
use crate::tensor::{increment, TensorD};

pub const DENSE_DOF_LIMIT: usize = 4096;

/// 1D mass and stiffness on every node (boundary nodes included for
/// Dirichlet, the `N` distinct nodes for periodic).
fn full_axis_matrices(p: &Partition1D, bc: BoundaryKind) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = p.h();
    let n = p.n();
    let size = if bc == BoundaryKind::Periodic { n } else { n + 1 };
    let mut mass = DMatrix::zeros(size, size);
    let mut stiff = DMatrix::zeros(size, size);
    for e in 0..n {
        let (i, j) = (e % size, (e + 1) % size);
        let local_m = [[2.0 * h / 6.0, h / 6.0], [h / 6.0, 2.0 * h / 6.0]];
        let local_k = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        for (r, gr) in [i, j].into_iter().enumerate() {
            for (c, gc) in [i, j].into_iter().enumerate() {
                mass[(gr, gc)] += local_m[r][c];
                stiff[(gr, gc)] += local_k[r][c];
            }
        }
    }
    (mass, stiff)
}

pub struct DenseSemidiscrete {
    problem: Problem,
    model: LoadModel,
    cell: f64,
    shape: Vec<usize>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    coords: Vec<Vec<f64>>,
    mass_ii: DMatrix<f64>,
    /// `D K` restricted to interior rows and columns.
    stiff_ii: DMatrix<f64>,
    mass_rows: DMatrix<f64>,
    stiff_rows: DMatrix<f64>,
    mass_chol: Cholesky<f64, Dyn>,
}

impl DenseSemidiscrete {
    pub fn new(problem: &Problem, mesh: &TensorMesh) -> Result<Self> {
        Self::with_model(problem, mesh, LoadModel::default())
    }

    pub fn with_model(problem: &Problem, mesh: &TensorMesh, model: LoadModel) -> Result<Self> {
        let dofs = mesh.total_dofs();
        if dofs > DENSE_DOF_LIMIT {
            return Err(EifeError::Scale {
                dofs,
                limit: DENSE_DOF_LIMIT,
            });
        }
        let parts = mesh.partitions();
        let bc = mesh.bc();
        let axis: Vec<_> = parts.iter().map(|p| full_axis_matrices(p, bc)).collect();
        let mut mass = axis[0].0.clone();
        for (m, _) in &axis[1..] {
            mass = mass.kronecker(m);
        }
        let mut stiff = DMatrix::zeros(mass.nrows(), mass.ncols());
        for g in 0..axis.len() {
            let mut term = if g == 0 { axis[0].1.clone() } else { axis[0].0.clone() };
            for (a, (m, k)) in axis.iter().enumerate().skip(1) {
                term = term.kronecker(if a == g { k } else { m });
            }
            stiff += term;
        }
        stiff *= problem.diffusion;

        let full_shape: Vec<usize> = axis.iter().map(|(m, _)| m.nrows()).collect();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut coords = Vec::new();
        let mut idx = vec![0usize; full_shape.len()];
        for flat in 0..full_shape.iter().product() {
            coords.push(idx.iter().zip(parts).map(|(&j, p)| p.node(j)).collect());
            let on_boundary = bc != BoundaryKind::Periodic && idx.iter().zip(parts).any(|(&j, p)| j == 0 || j == p.n());
            if on_boundary {
                boundary.push(flat);
            } else {
                interior.push(flat);
            }
            increment(&mut idx, &full_shape);
        }
        let mass_rows = mass.select_rows(&interior);
        let stiff_rows = stiff.select_rows(&interior);
        let mass_ii = mass_rows.select_columns(&interior);
        let stiff_ii = stiff_rows.select_columns(&interior);
        let mass_chol = Cholesky::new(mass_ii.clone())
            .ok_or_else(|| EifeError::Config("mass matrix is not positive definite".into()))?;
        Ok(DenseSemidiscrete {
            problem: problem.clone(),
            model,
            cell: mesh.spacing().iter().product(),
            shape: mesh.dof_shape(),
            interior,
            boundary,
            coords,
            mass_ii,
            stiff_ii,
            mass_rows,
            stiff_rows,
            mass_chol,
        })
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass_ii
    }

    /// Diffusion-scaled stiffness `D K` on the unknowns.
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiff_ii
    }

    /// `M⁻¹ (F(t, U) − M_IB ġ − D K_IB g)`: everything but the `−M⁻¹ D K U` part.
    /// The interpolated model takes `F = M_I· f` over all nodes, the lumped
    /// model `F_i = f_i Πh` on the unknowns.
    pub fn load(&self, t: f64, u: &TensorD) -> Result<DVector<f64>> {
        u.require_shape(&self.shape)?;
        let n_all = self.coords.len();
        let mut u_all = DVector::zeros(n_all);
        let mut rate_all = DVector::zeros(n_all);
        for (k, &i) in self.interior.iter().enumerate() {
            u_all[i] = u.data()[k];
        }
        for &b in &self.boundary {
            u_all[b] = self.problem.boundary_value(t, &self.coords[b]);
            rate_all[b] = self.problem.boundary_rate(t, &self.coords[b]);
        }
        let mut boundary_only = u_all.clone();
        for &i in &self.interior {
            boundary_only[i] = 0.0;
        }
        let mut rhs = -(&self.mass_rows * rate_all) - &self.stiff_rows * boundary_only;
        match self.model {
            LoadModel::Interpolated => {
                let mut f_all = DVector::zeros(n_all);
                for i in 0..n_all {
                    f_all[i] = self.problem.reaction_checked(t, &self.coords[i], u_all[i])?;
                }
                rhs += &self.mass_rows * f_all;
            }
            LoadModel::Lumped => {
                for (k, &i) in self.interior.iter().enumerate() {
                    rhs[k] += self.cell * self.problem.reaction_checked(t, &self.coords[i], u_all[i])?;
                }
            }
        }
        Ok(self.mass_chol.solve(&rhs))
    }

    /// `dU/dt = M⁻¹ (F − D K U)` with boundary rows eliminated.
    pub fn rhs(&self, t: f64, u: &TensorD) -> Result<TensorD> {
        let load = self.load(t, u)?;
        let ku = &self.stiff_ii * DVector::from_column_slice(u.data());
        let out = load - self.mass_chol.solve(&ku);
        TensorD::new(self.shape.clone(), out.as_slice().to_vec())
    }

    /// `φ_k(−τ M⁻¹ D K)` via the eigendecomposition of `L⁻¹ D K L⁻ᵀ`, `M = L Lᵀ`.
    pub fn phi_operator(&self, k: usize, tau: f64) -> DMatrix<f64> {
        let l = self.mass_chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .expect("cholesky factor of a positive definite matrix is invertible");
        let s = &l_inv * &self.stiff_ii * l_inv.transpose();
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s);
        let weights = DMatrix::from_diagonal(&eig.eigenvalues.map(|lam| phi(k, -tau * lam)));
        l_inv.transpose() * &eig.eigenvectors * weights * eig.eigenvectors.transpose() * l.transpose()
    }

    pub fn eife1_step(&self, t: f64, u: &TensorD, dt: f64) -> Result<TensorD> {
        let u0 = DVector::from_column_slice(u.data());
        let g = self.load(t, u)?;
        let next = self.phi_operator(0, dt) * &u0 + self.phi_operator(1, dt) * g * dt;
        TensorD::new(self.shape.clone(), next.as_slice().to_vec())
    }

    pub fn eife2_step(&self, t: f64, u: &TensorD, dt: f64, c2: f64) -> Result<TensorD> {
        let u0 = DVector::from_column_slice(u.data());
        let g1 = self.load(t, u)?;
        let stage = self.phi_operator(0, c2 * dt) * &u0 + self.phi_operator(1, c2 * dt) * &g1 * (c2 * dt);
        let stage = TensorD::new(self.shape.clone(), stage.as_slice().to_vec())?;
        let g2 = self.load(t + c2 * dt, &stage)?;
        let p1 = self.phi_operator(1, dt);
        let p2 = self.phi_operator(2, dt);
        let next = self.phi_operator(0, dt) * &u0 + (&p1 * &g1 - &p2 * &g1 / c2 + &p2 * &g2 / c2) * dt;
        TensorD::new(self.shape.clone(), next.as_slice().to_vec())
    }
}

/// Dense semi-discrete right-hand side `dU/dt` at nodal state `u`.
pub fn dense_semidiscrete_rhs(problem: &Problem, mesh: &TensorMesh, t: f64, u: &TensorD) -> Result<TensorD> {
    DenseSemidiscrete::new(problem, mesh)?.rhs(t, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{builtin_flory_huggins, BoundaryData, InitialData};
    use std::sync::Arc;

    #[test]
    fn zero_state_zero_forcing() {
        let p = Problem {
            name: "zero".into(),
            diffusion: 1.0,
            reaction: Arc::new(|_, _, _| 0.0),
            reaction_du: None,
            boundary: BoundaryData::Homogeneous,
            initial: InitialData::Function(Arc::new(|_| 0.0)),
            exact: None,
            exact_grad: None,
            admissible: None,
            domain: vec![(0.0, 1.0); 2],
            t_end: 1.0,
            energy: None,
        };
        let mesh = TensorMesh::uniform(&p.domain, &[4, 3], BoundaryKind::HomogeneousDirichlet).unwrap();
        let r = dense_semidiscrete_rhs(&p, &mesh, 0.0, &TensorD::zeros(&mesh.dof_shape())).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn scale_limit() {
        let p = builtin_flory_huggins(0.01, 0.8, 1.6, 1).unwrap();
        let mesh = TensorMesh::uniform(&p.domain, &[17, 17, 17], BoundaryKind::Periodic).unwrap();
        assert!(matches!(
            DenseSemidiscrete::new(&p, &mesh),
            Err(EifeError::Scale { .. })
        ));
    }
}
