//! Uniform tensor-product partitions of rectangular domains.

use crate::error::{EifeError, Result};
use crate::tensor::MAX_DIM;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition1D {
    a: f64,
    b: f64,
    n: usize,
}

impl Partition1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(EifeError::Config(format!("interval ({a}, {b}) is empty")));
        }
        if n < 2 {
            return Err(EifeError::Config(format!(
                "a partition needs at least 2 subintervals, got {n}"
            )));
        }
        Ok(Partition1D { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Coordinate of grid node `j`, `0 ≤ j ≤ n`.
    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h()
    }
}

/// Boundary-condition kind, applied globally to the whole boundary.
///
/// The boundary trace for `Dirichlet` lives on the [`crate::problems::Problem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    HomogeneousDirichlet,
    Dirichlet,
    Periodic,
}

impl BoundaryKind {
    pub fn is_dirichlet(self) -> bool {
        !matches!(self, BoundaryKind::Periodic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorMesh {
    partitions: Vec<Partition1D>,
    bc: BoundaryKind,
}

impl TensorMesh {
    pub fn new(partitions: Vec<Partition1D>, bc: BoundaryKind) -> Result<Self> {
        if partitions.is_empty() || partitions.len() > MAX_DIM {
            return Err(EifeError::Config(format!(
                "mesh dimension must be 1..={MAX_DIM}, got {}",
                partitions.len()
            )));
        }
        Ok(TensorMesh { partitions, bc })
    }

    /// Convenience constructor from `(a, b)` bounds and subinterval counts.
    pub fn uniform(bounds: &[(f64, f64)], n: &[usize], bc: BoundaryKind) -> Result<Self> {
        if bounds.len() != n.len() {
            return Err(EifeError::Config(format!(
                "{} axis bounds given for {} axis resolutions",
                bounds.len(),
                n.len()
            )));
        }
        let parts = bounds
            .iter()
            .zip(n)
            .map(|(&(a, b), &n)| Partition1D::new(a, b, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts, bc)
    }

    pub fn partitions(&self) -> &[Partition1D] {
        &self.partitions
    }

    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }

    pub fn ndim(&self) -> usize {
        self.partitions.len()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.partitions.iter().map(Partition1D::h).collect()
    }

    /// Ratio of the largest to the smallest mesh size.
    pub fn aspect_ratio(&self) -> f64 {
        let h = self.spacing();
        let max = h.iter().cloned().fold(f64::MIN, f64::max);
        let min = h.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    pub fn volume(&self) -> f64 {
        self.partitions.iter().map(Partition1D::length).product()
    }

    /// Unknowns per axis: `N - 1` for Dirichlet kinds, `N` for periodic.
    pub fn dof_shape(&self) -> Vec<usize> {
        self.partitions
            .iter()
            .map(|p| match self.bc {
                BoundaryKind::Periodic => p.n,
                _ => p.n - 1,
            })
            .collect()
    }

    pub fn total_dofs(&self) -> usize {
        self.dof_shape().iter().product()
    }

    /// Grid node index (0..=N) owned by unknown `k` along an axis.
    pub(crate) fn owned_node(&self, k: usize) -> usize {
        match self.bc {
            BoundaryKind::Periodic => k,
            _ => k + 1,
        }
    }

    pub fn node_coordinates(&self, index: &[usize]) -> Result<Vec<f64>> {
        let shape = self.dof_shape();
        if index.len() != shape.len() || index.iter().zip(&shape).any(|(i, n)| i >= n) {
            return Err(EifeError::Bounds {
                index: index.to_vec(),
                shape,
            });
        }
        Ok(index
            .iter()
            .zip(&self.partitions)
            .map(|(&k, p)| p.node(self.owned_node(k)))
            .collect())
    }

    /// Writes the coordinates of unknown `index` into `x` without bounds checks.
    pub(crate) fn coords_into(&self, index: &[usize], x: &mut [f64]) {
        for (a, p) in self.partitions.iter().enumerate() {
            x[a] = p.node(self.owned_node(index[a]));
        }
    }

    pub fn describe(&self) -> String {
        self.partitions
            .iter()
            .map(|p| p.n.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_shapes() {
        let m = TensorMesh::uniform(&[(0.0, 1.0), (0.0, 1.0)], &[8, 4], BoundaryKind::HomogeneousDirichlet).unwrap();
        assert_eq!(m.dof_shape(), vec![7, 3]);
        let m = TensorMesh::uniform(&[(0.0, 1.0); 3], &[128, 128, 128], BoundaryKind::Periodic).unwrap();
        assert_eq!(m.dof_shape(), vec![128, 128, 128]);
        let m = TensorMesh::uniform(&[(0.0, 1.0)], &[2], BoundaryKind::Dirichlet).unwrap();
        assert_eq!(m.dof_shape(), vec![1]);
    }

    #[test]
    fn coordinates() {
        let m = TensorMesh::uniform(&[(0.0, 1.0)], &[4], BoundaryKind::HomogeneousDirichlet).unwrap();
        assert_eq!(m.node_coordinates(&[0]).unwrap(), vec![0.25]);
        let m = TensorMesh::uniform(&[(0.0, 1.0)], &[4], BoundaryKind::Periodic).unwrap();
        assert_eq!(m.node_coordinates(&[0]).unwrap(), vec![0.0]);
        let m = TensorMesh::uniform(&[(0.0, 1.0), (0.0, 1.0)], &[4, 4], BoundaryKind::HomogeneousDirichlet).unwrap();
        assert_eq!(m.node_coordinates(&[1, 2]).unwrap(), vec![0.5, 0.75]);
        assert!(m.node_coordinates(&[3, 0]).is_err());
        assert!(m.node_coordinates(&[0]).is_err());
    }

    #[test]
    fn dirichlet_nodes_are_interior_and_affine() {
        let m = TensorMesh::uniform(&[(0.5, 2.5), (0.0, 1.0)], &[16, 8], BoundaryKind::Dirichlet).unwrap();
        let shape = m.dof_shape();
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let x = m.node_coordinates(&[i, j]).unwrap();
                assert!(x[0] > 0.5 && x[0] < 2.5 && x[1] > 0.0 && x[1] < 1.0);
            }
        }
        let h = m.spacing();
        let x0 = m.node_coordinates(&[3, 2]).unwrap();
        let x1 = m.node_coordinates(&[4, 2]).unwrap();
        assert_eq!(x1[0] - x0[0], h[0]);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition1D::new(1.0, 1.0, 4).is_err());
        assert!(Partition1D::new(0.0, 1.0, 1).is_err());
        let p = Partition1D::new(0.0, std::f64::consts::SQRT_2, 64).unwrap();
        assert!((p.h() * 64.0 - p.length()).abs() <= 1e-14 * p.length());
    }
}
