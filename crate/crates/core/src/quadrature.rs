//! Tensor-product Gauss quadrature over the elements of a [`TensorMesh`],
//! applied to multilinear interpolants of nodal data.

use rayon::prelude::*;

use crate::mesh::{BoundaryKind, TensorMesh};
use crate::tensor::{increment, TensorD};

/// Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            points[i] = 0.5 * (1.0 - x);
            weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussRule { points, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodal values on the full grid (`N + 1` nodes per axis), row-major.
#[derive(Debug, Clone)]
pub struct FullField {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl FullField {
    /// Extends unknowns to the full grid: boundary nodes take `boundary(x)`
    /// for Dirichlet meshes, and periodic meshes wrap around.
    pub fn from_unknowns<B>(u: &TensorD, mesh: &TensorMesh, boundary: B) -> Self
    where
        B: Fn(&[f64]) -> f64,
    {
        let shape: Vec<usize> = mesh.partitions().iter().map(|p| p.n() + 1).collect();
        let parts = mesh.partitions();
        let dof = mesh.dof_shape();
        let dof_strides = crate::tensor::strides(&dof);
        let d = shape.len();
        let mut values = Vec::with_capacity(shape.iter().product());
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        let total: usize = shape.iter().product();
        for _ in 0..total {
            let on_boundary = mesh.bc().is_dirichlet() && idx.iter().zip(parts).any(|(&i, p)| i == 0 || i == p.n());
            let v = if on_boundary {
                for a in 0..d {
                    x[a] = parts[a].node(idx[a]);
                }
                boundary(&x)
            } else {
                let flat: usize = (0..d)
                    .map(|a| {
                        let k = match mesh.bc() {
                            BoundaryKind::Periodic => idx[a] % parts[a].n(),
                            _ => idx[a] - 1,
                        };
                        k * dof_strides[a]
                    })
                    .sum();
                u.data()[flat]
            };
            values.push(v);
            increment(&mut idx, &shape);
        }
        FullField { shape, values }
    }
}

/// Value and gradient of a multilinear interpolant at a quadrature point.
pub struct PointEval<'a> {
    pub x: &'a [f64],
    pub u: f64,
    pub grad: &'a [f64],
}

/// `Σ_elements Σ_qp w · integrand(point)` for the multilinear interpolant of
/// `field`. Elements are processed in parallel over the first axis and summed
/// in a fixed order.
pub fn integrate<F>(mesh: &TensorMesh, field: &FullField, rule: &GaussRule, integrand: F) -> f64
where
    F: Fn(&PointEval) -> f64 + Sync,
{
    let parts = mesh.partitions();
    let d = parts.len();
    let h: Vec<f64> = mesh.spacing();
    let elem_shape: Vec<usize> = parts.iter().map(|p| p.n()).collect();
    let node_strides = crate::tensor::strides(&field.shape);
    let nq = rule.points.len();
    let qshape = vec![nq; d];
    let n_corners = 1usize << d;
    let jac: f64 = h.iter().product();

    // basis values and gradients at every quadrature point of the reference element
    let n_qp = nq.pow(d as u32);
    let mut phi_tab = vec![0.0; n_qp * n_corners];
    let mut dphi_tab = vec![0.0; n_qp * n_corners * d];
    let mut w_tab = vec![0.0; n_qp];
    let mut xi_tab = vec![0.0; n_qp * d];
    let mut q = vec![0usize; d];
    for iq in 0..n_qp {
        w_tab[iq] = jac * q.iter().map(|&k| rule.weights[k]).product::<f64>();
        for a in 0..d {
            xi_tab[iq * d + a] = rule.points[q[a]] * h[a];
        }
        for c in 0..n_corners {
            let mut phi = 1.0;
            for a in 0..d {
                let bit = (c >> (d - 1 - a)) & 1;
                let xi = rule.points[q[a]];
                phi *= if bit == 1 { xi } else { 1.0 - xi };
            }
            phi_tab[iq * n_corners + c] = phi;
            for g in 0..d {
                let mut dphi = 1.0;
                for a in 0..d {
                    let bit = (c >> (d - 1 - a)) & 1;
                    let xi = rule.points[q[a]];
                    dphi *= match (a == g, bit) {
                        (true, 1) => 1.0 / h[a],
                        (true, _) => -1.0 / h[a],
                        (false, 1) => xi,
                        (false, _) => 1.0 - xi,
                    };
                }
                dphi_tab[(iq * n_corners + c) * d + g] = dphi;
            }
        }
        increment(&mut q, &qshape);
    }
    let corner_offsets: Vec<usize> = (0..n_corners)
        .map(|c| (0..d).map(|a| ((c >> (d - 1 - a)) & 1) * node_strides[a]).sum())
        .collect();

    let partial: Vec<f64> = (0..elem_shape[0])
        .into_par_iter()
        .map(|e0| {
            let mut sum = 0.0;
            let mut e = vec![0usize; d];
            e[0] = e0;
            let rest: usize = elem_shape[1..].iter().product();
            let mut corner = vec![0.0; n_corners];
            let mut x = vec![0.0; d];
            let mut grad = vec![0.0; d];
            for _ in 0..rest {
                let base: usize = e.iter().zip(&node_strides).map(|(i, s)| i * s).sum();
                for (cv, off) in corner.iter_mut().zip(&corner_offsets) {
                    *cv = field.values[base + off];
                }
                for iq in 0..n_qp {
                    for a in 0..d {
                        x[a] = parts[a].node(e[a]) + xi_tab[iq * d + a];
                    }
                    let phis = &phi_tab[iq * n_corners..(iq + 1) * n_corners];
                    let u: f64 = corner.iter().zip(phis).map(|(c, p)| c * p).sum();
                    for (g, ga) in grad.iter_mut().enumerate() {
                        *ga = corner
                            .iter()
                            .enumerate()
                            .map(|(c, cv)| cv * dphi_tab[(iq * n_corners + c) * d + g])
                            .sum();
                    }
                    sum += w_tab[iq] * integrand(&PointEval { x: &x, u, grad: &grad });
                }
                if d > 1 {
                    increment(&mut e[1..], &elem_shape[1..]);
                }
            }
            sum
        })
        .collect();
    partial.iter().sum()
}

/// Load vector `b_i = ∫ s φ_i` on the full grid, by quadrature of `s`.
pub fn assemble_load<S>(mesh: &TensorMesh, rule: &GaussRule, source: S) -> FullField
where
    S: Fn(&[f64]) -> f64,
{
    let parts = mesh.partitions();
    let d = parts.len();
    let h = mesh.spacing();
    let shape: Vec<usize> = parts.iter().map(|p| p.n() + 1).collect();
    let strides = crate::tensor::strides(&shape);
    let elem_shape: Vec<usize> = parts.iter().map(|p| p.n()).collect();
    let nq = rule.points.len();
    let qshape = vec![nq; d];
    let jac: f64 = h.iter().product();
    let mut values = vec![0.0; shape.iter().product()];
    let mut e = vec![0usize; d];
    let mut x = vec![0.0; d];
    for _ in 0..elem_shape.iter().product::<usize>() {
        let base: usize = e.iter().zip(&strides).map(|(i, s)| i * s).sum();
        let mut q = vec![0usize; d];
        for _ in 0..nq.pow(d as u32) {
            let mut w = jac;
            for a in 0..d {
                x[a] = parts[a].node(e[a]) + rule.points[q[a]] * h[a];
                w *= rule.weights[q[a]];
            }
            let s = source(&x) * w;
            for c in 0..(1usize << d) {
                let mut phi = 1.0;
                let mut off = 0;
                for a in 0..d {
                    let bit = (c >> (d - 1 - a)) & 1;
                    let xi = rule.points[q[a]];
                    phi *= if bit == 1 { xi } else { 1.0 - xi };
                    off += bit * strides[a];
                }
                values[base + off] += s * phi;
            }
            increment(&mut q, &qshape);
        }
        increment(&mut e, &elem_shape);
    }
    FullField { shape, values }
}
