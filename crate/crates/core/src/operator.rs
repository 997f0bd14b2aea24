//! The diagonalized spatial operator and the φ-functions evaluated on it.
//!
//! In modal coordinates the semi-discrete system decouples into
//! `dŨ/dt = -H ⊙ Ũ + Ĥ ⊙ P(F)`, with `H` the modal decay rates and `Ĥ` the
//! reciprocal modal masses.

use crate::error::{EifeError, Result};
use crate::mesh::TensorMesh;
use crate::tensor::TensorD;
use crate::transforms::{axis_spectrum, AxisSpectrum};

/// Below this |z| the φ-functions are summed from their Taylor series.
pub const PHI_TAYLOR_SWITCH: f64 = 0.5;
const PHI_TAYLOR_TERMS: usize = 20;

#[derive(Debug, Clone)]
pub struct DiagonalizedOperator {
    spectra: Vec<AxisSpectrum>,
    h: TensorD,
    h_hat: TensorD,
    diffusion: f64,
}

impl DiagonalizedOperator {
    pub fn build(mesh: &TensorMesh, diffusion: f64) -> Result<Self> {
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(EifeError::Config(format!(
                "diffusion coefficient must be positive, got {diffusion}"
            )));
        }
        let spectra: Vec<AxisSpectrum> = mesh.partitions().iter().map(|p| axis_spectrum(p, mesh.bc())).collect();
        let shape = mesh.dof_shape();
        let ratios: Vec<Vec<f64>> = spectra
            .iter()
            .map(|s| s.lambda_stiff.iter().zip(&s.lambda_mass).map(|(b, a)| b / a).collect())
            .collect();
        let h = TensorD::from_fn(&shape, |idx| {
            diffusion * idx.iter().enumerate().map(|(a, &i)| ratios[a][i]).sum::<f64>()
        });
        let h_hat = TensorD::from_fn(&shape, |idx| {
            1.0 / idx
                .iter()
                .enumerate()
                .map(|(a, &i)| spectra[a].lambda_mass[i])
                .product::<f64>()
        });
        Ok(DiagonalizedOperator {
            spectra,
            h,
            h_hat,
            diffusion,
        })
    }

    pub fn spectra(&self) -> &[AxisSpectrum] {
        &self.spectra
    }

    /// Modal decay rates.
    pub fn h(&self) -> &TensorD {
        &self.h
    }

    /// Reciprocal modal masses.
    pub fn h_hat(&self) -> &TensorD {
        &self.h_hat
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn shape(&self) -> &[usize] {
        self.h.shape()
    }
}

/// φ_k(z) for k ∈ {0, 1, 2}, with φ_0 = e^z and φ_{k+1}(z) = (φ_k(z) − φ_k(0)) / z.
pub fn phi(k: usize, z: f64) -> f64 {
    match k {
        0 => z.exp(),
        1 | 2 if z.abs() < PHI_TAYLOR_SWITCH => phi_series(k, z),
        1 => z.exp_m1() / z,
        2 => (z.exp_m1() - z) / (z * z),
        _ => panic!("phi_{k} is not provided (k must be 0, 1 or 2)"),
    }
}

/// Σ_{m≥0} z^m / (m + k)!
fn phi_series(k: usize, z: f64) -> f64 {
    let mut coeffs = [0.0; PHI_TAYLOR_TERMS];
    let mut fact = (1..=k).map(|i| i as f64).product::<f64>();
    for (m, c) in coeffs.iter_mut().enumerate() {
        *c = 1.0 / fact;
        fact *= (m + k + 1) as f64;
    }
    coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
}

/// Entrywise φ_k(−scale·τ·H).
pub fn phi_tensor(k: usize, op: &DiagonalizedOperator, tau: f64, scale: f64) -> TensorD {
    let s = scale * tau;
    op.h().map(move |h| phi(k, -s * h))
}
