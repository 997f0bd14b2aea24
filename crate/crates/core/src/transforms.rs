//! Orthogonal transforms that simultaneously diagonalize the 1D mass and
//! stiffness matrices of the linear element.
//!
//! Dirichlet axes use the DST-I matrix `P_kj = sin((k+1)(j+1)π/N)`, which is
//! symmetric with `P² = (N/2) I`; forward applies `P`, inverse `(2/N) P`.
//! Periodic axes use a real Fourier basis packed so that coefficient `k`
//! belongs to wavenumber `k` (cosine part for `2k ≤ N`, sine part otherwise).
//! Both are evaluated with FFTs, two real lines per complex transform.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::mesh::{BoundaryKind, Partition1D, TensorMesh};
use crate::tensor::{mode_multiply, TensorD};

/// Eigenvalues of one axis' mass (`lambda_mass`) and stiffness
/// (`lambda_stiff`) matrices in transform order.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpectrum {
    pub lambda_mass: Vec<f64>,
    pub lambda_stiff: Vec<f64>,
}

/// Dense 1D mass `(h/6) R` and stiffness `(1/h) G` matrices on the unknowns.
pub fn build_axis_matrices(p: &Partition1D, bc: BoundaryKind) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = p.h();
    let n = match bc {
        BoundaryKind::Periodic => p.n(),
        _ => p.n() - 1,
    };
    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    for i in 0..n {
        mass[(i, i)] += 4.0 * h / 6.0;
        stiff[(i, i)] += 2.0 / h;
        let neighbours: [Option<usize>; 2] = match bc {
            BoundaryKind::Periodic => [Some((i + n - 1) % n), Some((i + 1) % n)],
            _ => [i.checked_sub(1), (i + 1 < n).then_some(i + 1)],
        };
        for j in neighbours.into_iter().flatten() {
            mass[(i, j)] += h / 6.0;
            stiff[(i, j)] -= 1.0 / h;
        }
    }
    (mass, stiff)
}

pub fn axis_spectrum(p: &Partition1D, bc: BoundaryKind) -> AxisSpectrum {
    let h = p.h();
    let n = p.n();
    let s2: Vec<f64> = match bc {
        BoundaryKind::Periodic => (0..n).map(|k| (k as f64 * PI / n as f64).sin().powi(2)).collect(),
        _ => (1..n).map(|i| (i as f64 * PI / (2 * n) as f64).sin().powi(2)).collect(),
    };
    AxisSpectrum {
        lambda_mass: s2.iter().map(|s| h / 6.0 * (6.0 - 4.0 * s)).collect(),
        lambda_stiff: s2.iter().map(|s| 4.0 / h * s).collect(),
    }
}

/// Dense forward transform matrix for an axis with `n_sub` subintervals.
pub fn transform_matrix(n_sub: usize, bc: BoundaryKind) -> DMatrix<f64> {
    match bc {
        BoundaryKind::Periodic => {
            let n = n_sub;
            DMatrix::from_fn(n, n, |k, j| {
                let arg = 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                if 2 * k <= n {
                    arg.cos()
                } else {
                    arg.sin()
                }
            })
        }
        _ => {
            let n = n_sub - 1;
            DMatrix::from_fn(n, n, |k, j| {
                (((k + 1) * (j + 1)) % (2 * n_sub)) as f64 * PI / n_sub as f64
            })
            .map(f64::sin)
        }
    }
}

/// Dense inverse of [`transform_matrix`].
pub fn inverse_transform_matrix(n_sub: usize, bc: BoundaryKind) -> DMatrix<f64> {
    let fwd = transform_matrix(n_sub, bc);
    match bc {
        BoundaryKind::Periodic => {
            let n = n_sub;
            let mut inv = fwd.transpose();
            for k in 0..n {
                let norm = if k == 0 || 2 * k == n { n as f64 } else { n as f64 / 2.0 };
                inv.column_mut(k).scale_mut(1.0 / norm);
            }
            inv
        }
        _ => fwd * (2.0 / n_sub as f64),
    }
}

#[derive(Clone)]
enum AxisKernel {
    /// DST-I on lines of length `n - 1` through an odd extension of length `2n`.
    Sine { n: usize, fft: Arc<dyn Fft<f64>> },
    /// Packed real DFT on lines of length `n`.
    Fourier {
        n: usize,
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// FFT plans for every axis of a mesh.
#[derive(Clone)]
pub struct Transformer {
    shape: Vec<usize>,
    kernels: Vec<AxisKernel>,
}

impl std::fmt::Debug for Transformer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transformer").field("shape", &self.shape).finish()
    }
}

impl Transformer {
    pub fn new(mesh: &TensorMesh) -> Self {
        let mut planner = FftPlanner::new();
        let kernels = mesh
            .partitions()
            .iter()
            .map(|p| match mesh.bc() {
                BoundaryKind::Periodic => AxisKernel::Fourier {
                    n: p.n(),
                    fwd: planner.plan_fft_forward(p.n()),
                    inv: planner.plan_fft_inverse(p.n()),
                },
                _ => AxisKernel::Sine {
                    n: p.n(),
                    fft: planner.plan_fft_forward(2 * p.n()),
                },
            })
            .collect();
        Transformer {
            shape: mesh.dof_shape(),
            kernels,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn forward(&self, u: &TensorD) -> Result<TensorD> {
        self.apply(u, Direction::Forward)
    }

    pub fn inverse(&self, u: &TensorD) -> Result<TensorD> {
        self.apply(u, Direction::Inverse)
    }

    fn apply(&self, u: &TensorD, dir: Direction) -> Result<TensorD> {
        u.require_shape(&self.shape)?;
        let mut out = u.clone();
        for (axis, kernel) in self.kernels.iter().enumerate() {
            out = out.apply_along_axis(axis, |buf, count| kernel.run(buf, count, dir));
        }
        Ok(out)
    }
}

impl AxisKernel {
    fn run(&self, buf: &mut [f64], count: usize, dir: Direction) {
        match self {
            AxisKernel::Sine { n, fft } => sine_lines(*n, fft.as_ref(), buf, count, dir),
            AxisKernel::Fourier { n, fwd, inv } => match dir {
                Direction::Forward => fourier_forward_lines(*n, fwd.as_ref(), buf, count),
                Direction::Inverse => fourier_inverse_lines(*n, inv.as_ref(), buf, count),
            },
        }
    }
}

fn sine_lines(n: usize, fft: &dyn Fft<f64>, buf: &mut [f64], count: usize, dir: Direction) {
    let m = n - 1;
    let scale = match dir {
        Direction::Forward => 0.5,
        Direction::Inverse => 1.0 / n as f64,
    };
    let mut z = vec![Complex::new(0.0, 0.0); 2 * n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut l = 0;
    while l < count {
        let paired = l + 1 < count;
        let (a, rest) = buf[l * m..].split_at_mut(m);
        let b = if paired { Some(&mut rest[..m]) } else { None };

        z[0] = Complex::new(0.0, 0.0);
        z[n] = Complex::new(0.0, 0.0);
        for j in 0..m {
            let v = Complex::new(a[j], b.as_ref().map_or(0.0, |b| b[j]));
            z[j + 1] = v;
            z[2 * n - 1 - j] = -v;
        }
        fft.process_with_scratch(&mut z, &mut scratch);
        // X_k = 2 Σ (b_j - i a_j) sin(π j k / n)
        for k in 0..m {
            a[k] = -z[k + 1].im * scale;
        }
        if let Some(b) = b {
            for k in 0..m {
                b[k] = z[k + 1].re * scale;
            }
        }
        l += 2;
    }
}

fn fourier_forward_lines(n: usize, fft: &dyn Fft<f64>, buf: &mut [f64], count: usize) {
    let mut z = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut l = 0;
    while l < count {
        let paired = l + 1 < count;
        let (a, rest) = buf[l * n..].split_at_mut(n);
        let b = if paired { Some(&mut rest[..n]) } else { None };
        for j in 0..n {
            z[j] = Complex::new(a[j], b.as_ref().map_or(0.0, |b| b[j]));
        }
        fft.process_with_scratch(&mut z, &mut scratch);
        let pack = |spec: &dyn Fn(usize) -> Complex<f64>, out: &mut [f64]| {
            for (k, o) in out.iter_mut().enumerate() {
                let s = spec(k);
                *o = if 2 * k <= n { s.re } else { -s.im };
            }
        };
        // split the spectrum of a + ib into the spectra of a and b
        let spec_a = |k: usize| (z[k] + z[(n - k) % n].conj()) * 0.5;
        let spec_b = |k: usize| (z[k] - z[(n - k) % n].conj()) * Complex::new(0.0, -0.5);
        pack(&spec_a, a);
        if let Some(b) = b {
            pack(&spec_b, b);
        }
        l += 2;
    }
}

fn fourier_inverse_lines(n: usize, fft: &dyn Fft<f64>, buf: &mut [f64], count: usize) {
    let mut z = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let unpack = |c: &[f64], k: usize| -> Complex<f64> {
        if k == 0 || 2 * k == n {
            Complex::new(c[k], 0.0)
        } else if 2 * k < n {
            Complex::new(c[k], c[n - k])
        } else {
            Complex::new(c[n - k], -c[k])
        }
    };
    let scale = 1.0 / n as f64;
    let mut l = 0;
    while l < count {
        let paired = l + 1 < count;
        let (a, rest) = buf[l * n..].split_at_mut(n);
        let b = if paired { Some(&mut rest[..n]) } else { None };
        for k in 0..n {
            let sa = unpack(a, k);
            z[k] = match &b {
                Some(b) => sa + Complex::new(0.0, 1.0) * unpack(b, k),
                None => sa,
            };
        }
        fft.process_with_scratch(&mut z, &mut scratch);
        for j in 0..n {
            a[j] = z[j].re * scale;
        }
        if let Some(b) = b {
            for j in 0..n {
                b[j] = z[j].im * scale;
            }
        }
        l += 2;
    }
}

/// Forward transform along every axis (plans built on the fly).
pub fn forward_transform(u: &TensorD, mesh: &TensorMesh) -> Result<TensorD> {
    Transformer::new(mesh).forward(u)
}

pub fn inverse_transform(u: &TensorD, mesh: &TensorMesh) -> Result<TensorD> {
    Transformer::new(mesh).inverse(u)
}

/// Forward transform by dense mode products; the reference for the fast path.
pub fn dense_forward_transform(u: &TensorD, mesh: &TensorMesh) -> Result<TensorD> {
    u.require_shape(&mesh.dof_shape())?;
    let mut out = u.clone();
    for (axis, p) in mesh.partitions().iter().enumerate() {
        out = mode_multiply(&transform_matrix(p.n(), mesh.bc()), &out, axis)?;
    }
    Ok(out)
}

pub fn dense_inverse_transform(u: &TensorD, mesh: &TensorMesh) -> Result<TensorD> {
    u.require_shape(&mesh.dof_shape())?;
    let mut out = u.clone();
    for (axis, p) in mesh.partitions().iter().enumerate() {
        out = mode_multiply(&inverse_transform_matrix(p.n(), mesh.bc()), &out, axis)?;
    }
    Ok(out)
}
