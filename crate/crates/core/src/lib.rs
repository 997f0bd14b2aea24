//! Exponential integrator finite element (EIFE) solver for semilinear
//! parabolic equations `u_t = DΔu + f(t, x, u)` on rectangular domains.
//!
//! Multilinear finite elements on a tensor-product mesh give mass and
//! stiffness matrices that are simultaneously diagonalized by sine
//! (Dirichlet) or Fourier (periodic) transforms. The semi-discrete system
//! then decouples into scalar modes, each advanced by an explicit
//! exponential Runge–Kutta step.
//!
//! ```
//! use eife_core::{builtin_linear_rd, run, RunOptions, Scheme, SchemeConfig, TensorMesh};
//!
//! let problem = builtin_linear_rd();
//! let mesh = TensorMesh::uniform(&problem.domain, &[16, 8], problem.boundary_kind()).unwrap();
//! let cfg = SchemeConfig::with_steps(Scheme::eife2(), 32, problem.t_end).unwrap();
//! let out = run(&problem, &mesh, &cfg, &RunOptions::every(8), &mut []).unwrap();
//! assert_eq!(out.state.step_index, 32);
//! ```

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod expr;
pub mod mesh;
pub mod operator;
pub mod oracle;
pub mod problems;
pub mod quadrature;
pub mod stepper;
pub mod tensor;
pub mod transforms;

pub use analysis::{
    convergence_study, discrete_energy, error_norms, error_norms_with, nodal_energy, sup_norm, timing_study,
    ErrorNorms, ErrorReference, StudyReport, StudyRow, StudySpec,
};
pub use assembly::{initial_state, InitialMode, LoadContext, LoadModel};
pub use error::{EifeError, Result};
pub use mesh::{BoundaryKind, Partition1D, TensorMesh};
pub use operator::{phi, DiagonalizedOperator};
pub use problems::{
    builtin_allen_cahn_wave, builtin_flory_huggins, builtin_linear_rd, custom_problem, CustomSpec, EnergyParams,
    Problem,
};
pub use stepper::{
    eife1_step, eife2_step, run, Observer, RunOptions, RunOutcome, Scheme, SchemeConfig, SolverState, Stepper,
};
pub use tensor::{mode_multiply, TensorD};
pub use transforms::{forward_transform, inverse_transform, Transformer};
