//! EIFE1 and EIFE2 time stepping in modal coordinates.
//!
//! The state is kept as transformed coefficients `Ũ`; the nodal field is
//! recovered only to evaluate the nonlinearity and for observers.

use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{initial_state_with, InitialMode, LoadContext, LoadModel};
use crate::error::{EifeError, Result};
use crate::mesh::TensorMesh;
use crate::operator::{phi_tensor, DiagonalizedOperator};
use crate::problems::Problem;
use crate::tensor::TensorD;

const STEP_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Eife1,
    Eife2 { c2: f64 },
}

impl Scheme {
    pub fn eife2() -> Self {
        Scheme::Eife2 { c2: 0.5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Eife1 => "eife1",
            Scheme::Eife2 { .. } => "eife2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Scheme::Eife2 { c2 } if !(c2 > 0.0 && c2 <= 1.0) => {
                Err(EifeError::Config(format!("c2 must lie in (0, 1], got {c2}")))
            }
            _ => Ok(()),
        }
    }
}

/// Uniform stepping from `t = 0` to `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = SchemeConfig { scheme, dt, t_end };
        cfg.num_steps()?;
        Ok(cfg)
    }

    pub fn with_steps(scheme: Scheme, n_steps: usize, t_end: f64) -> Result<Self> {
        if n_steps == 0 {
            if t_end != 0.0 {
                return Err(EifeError::Config("zero steps require t_end = 0".into()));
            }
            scheme.validate()?;
            return Ok(SchemeConfig { scheme, dt: 0.0, t_end });
        }
        Self::new(scheme, t_end / n_steps as f64, t_end)
    }

    /// `N_T = T / dt`, which must be an integer.
    pub fn num_steps(&self) -> Result<usize> {
        self.scheme.validate()?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(EifeError::Config(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.t_end == 0.0 {
            return Ok(0);
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EifeError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        let n = (self.t_end / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_end).abs() > STEP_COUNT_TOL * self.t_end {
            return Err(EifeError::Config(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u_tilde: TensorD,
    pub step_index: usize,
}

/// Entrywise weight tensors of one step of size `dt`.
#[derive(Debug, Clone)]
pub struct StepWeights {
    pub scheme: Scheme,
    pub dt: f64,
    /// `e^{−dt H}`.
    pub decay: TensorD,
    /// `dt φ₁(−dt H)`, the EIFE1 load weight.
    pub load: TensorD,
    /// EIFE2 only: `e^{−c₂ dt H}`.
    pub stage_decay: Option<TensorD>,
    /// EIFE2 only: `a₂₁ = c₂ dt φ₁(−c₂ dt H)`.
    pub stage_load: Option<TensorD>,
    /// EIFE2 only: `b₁ = dt (φ₁ − φ₂ / c₂)` and `b₂ = dt φ₂ / c₂`, both at `−dt H`.
    pub b1: Option<TensorD>,
    pub b2: Option<TensorD>,
}

impl StepWeights {
    pub fn new(op: &DiagonalizedOperator, scheme: Scheme, dt: f64) -> Result<Self> {
        scheme.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EifeError::Config(format!("dt must be positive, got {dt}")));
        }
        let decay = phi_tensor(0, op, dt, 1.0);
        let phi1 = phi_tensor(1, op, dt, 1.0);
        let mut w = StepWeights {
            scheme,
            dt,
            decay,
            load: phi1.scale(dt),
            stage_decay: None,
            stage_load: None,
            b1: None,
            b2: None,
        };
        if let Scheme::Eife2 { c2 } = scheme {
            let phi2 = phi_tensor(2, op, dt, 1.0);
            w.stage_decay = Some(phi_tensor(0, op, dt, c2));
            w.stage_load = Some(phi_tensor(1, op, dt, c2).scale(c2 * dt));
            w.b1 = Some(phi1.lincomb(dt, &phi2, -dt / c2)?);
            w.b2 = Some(phi2.scale(dt / c2));
        }
        Ok(w)
    }
}

/// `a ⊙ x + b ⊙ y`, entrywise in parallel.
fn fma2(a: &TensorD, x: &TensorD, b: &TensorD, y: &TensorD) -> TensorD {
    let data = a
        .data()
        .par_iter()
        .zip(x.data().par_iter())
        .zip(b.data().par_iter().zip(y.data().par_iter()))
        .map(|((a, x), (b, y))| a * x + b * y)
        .collect();
    TensorD::new(x.shape().to_vec(), data).expect("operands share a shape")
}

/// `a ⊙ x + b ⊙ y + c ⊙ z`, entrywise in parallel.
fn fma3(a: &TensorD, x: &TensorD, b: &TensorD, y: &TensorD, c: &TensorD, z: &TensorD) -> TensorD {
    let data = a
        .data()
        .par_iter()
        .zip(x.data().par_iter())
        .zip(b.data().par_iter().zip(y.data().par_iter()))
        .zip(c.data().par_iter().zip(z.data().par_iter()))
        .map(|(((a, x), (b, y)), (c, z))| a * x + b * y + c * z)
        .collect();
    TensorD::new(x.shape().to_vec(), data).expect("operands share a shape")
}

/// One step with precomputed weights.
pub fn step_with(state: &SolverState, ctx: &LoadContext, w: &StepWeights) -> Result<SolverState> {
    state.u_tilde.require_shape(ctx.operator().shape())?;
    let tf = ctx.transformer();
    let u = tf.inverse(&state.u_tilde)?;
    let g1 = ctx.transformed_load(state.t, &u)?;
    let next = match w.scheme {
        Scheme::Eife1 => fma2(&w.decay, &state.u_tilde, &w.load, &g1),
        Scheme::Eife2 { c2 } => {
            let (Some(sd), Some(sl), Some(b1), Some(b2)) = (&w.stage_decay, &w.stage_load, &w.b1, &w.b2) else {
                return Err(EifeError::Config("EIFE2 weights missing stage terms".into()));
            };
            let stage = fma2(sd, &state.u_tilde, sl, &g1);
            let u_stage = tf.inverse(&stage)?;
            let g2 = ctx.transformed_load(state.t + c2 * w.dt, &u_stage)?;
            fma3(&w.decay, &state.u_tilde, b1, &g1, b2, &g2)
        }
    };
    Ok(SolverState {
        t: state.t + w.dt,
        u_tilde: next,
        step_index: state.step_index + 1,
    })
}

/// One EIFE1 step of size `dt`; weights are built on the fly.
pub fn eife1_step(state: &SolverState, ctx: &LoadContext, dt: f64) -> Result<SolverState> {
    let w = StepWeights::new(ctx.operator(), Scheme::Eife1, dt)?;
    step_with(state, ctx, &w)
}

/// One EIFE2 step of size `dt` with stage abscissa `c2`.
pub fn eife2_step(state: &SolverState, ctx: &LoadContext, dt: f64, c2: f64) -> Result<SolverState> {
    let w = StepWeights::new(ctx.operator(), Scheme::Eife2 { c2 }, dt)?;
    step_with(state, ctx, &w)
}

/// Load context plus cached weights for uniform stepping.
#[derive(Debug, Clone)]
pub struct Stepper {
    ctx: LoadContext,
    weights: Option<StepWeights>,
}

impl Stepper {
    pub fn new(problem: &Problem, mesh: &TensorMesh, scheme: Scheme, dt: f64) -> Result<Self> {
        Self::with_model(problem, mesh, scheme, dt, LoadModel::default())
    }

    pub fn with_model(problem: &Problem, mesh: &TensorMesh, scheme: Scheme, dt: f64, model: LoadModel) -> Result<Self> {
        let ctx = LoadContext::with_model(problem, mesh, model)?;
        let weights = if dt > 0.0 {
            Some(StepWeights::new(ctx.operator(), scheme, dt)?)
        } else {
            scheme.validate()?;
            None
        };
        Ok(Stepper { ctx, weights })
    }

    pub fn context(&self) -> &LoadContext {
        &self.ctx
    }

    pub fn weights(&self) -> Option<&StepWeights> {
        self.weights.as_ref()
    }

    /// Transformed interpolated initial state at `t = 0`.
    pub fn initial(&self) -> Result<SolverState> {
        self.initial_with(InitialMode::Interpolate)
    }

    pub fn initial_with(&self, mode: InitialMode) -> Result<SolverState> {
        let u0 = initial_state_with(self.ctx.problem(), self.ctx.mesh(), mode)?;
        self.state_from_nodal(&u0, 0.0)
    }

    pub fn state_from_nodal(&self, u: &TensorD, t: f64) -> Result<SolverState> {
        Ok(SolverState {
            t,
            u_tilde: self.ctx.transformer().forward(u)?,
            step_index: 0,
        })
    }

    pub fn nodal(&self, state: &SolverState) -> Result<TensorD> {
        self.ctx.transformer().inverse(&state.u_tilde)
    }

    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        let w = self
            .weights
            .as_ref()
            .ok_or_else(|| EifeError::Config("stepper built without a time step".into()))?;
        step_with(state, &self.ctx, w).map_err(|e| e.at_step(state.step_index + 1))
    }
}

/// Receives the nodal solution at observed steps.
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, u: &TensorD, mesh: &TensorMesh) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(usize, f64, &TensorD, &TensorMesh) -> Result<()>,
{
    fn observe(&mut self, step: usize, t: f64, u: &TensorD, mesh: &TensorMesh) -> Result<()> {
        self(step, t, u, mesh)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: SolverState,
    /// Nodal solution at the final time.
    pub nodal: TensorD,
    /// Wall-clock seconds spent in each step.
    pub step_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Observers see step 0, every `observe_every`-th step and the final step.
    pub observe_every: usize,
    pub load: LoadModel,
    pub initial: InitialMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            observe_every: usize::MAX,
            load: LoadModel::default(),
            initial: InitialMode::default(),
        }
    }
}

impl RunOptions {
    pub fn every(observe_every: usize) -> Self {
        RunOptions {
            observe_every,
            ..Default::default()
        }
    }
}

/// Advances `N_T = T / dt` uniform steps from the initial data.
pub fn run(
    problem: &Problem,
    mesh: &TensorMesh,
    cfg: &SchemeConfig,
    opts: &RunOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    let observe_every = opts.observe_every;
    if observe_every == 0 {
        return Err(EifeError::Config("observer cadence must be at least 1".into()));
    }
    let n_steps = cfg.num_steps()?;
    let dt = if n_steps > 0 { cfg.dt } else { 0.0 };
    let stepper = Stepper::with_model(problem, mesh, cfg.scheme, dt, opts.load)?;
    let mut state = stepper.initial_with(opts.initial)?;
    let mut notify = |state: &SolverState, nodal: &TensorD| -> Result<()> {
        for obs in observers.iter_mut() {
            obs.observe(state.step_index, state.t, nodal, mesh)?;
        }
        Ok(())
    };
    let mut nodal = stepper.nodal(&state)?;
    notify(&state, &nodal)?;
    let mut step_seconds = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let start = Instant::now();
        state = stepper.step(&state)?;
        state.t = (n + 1) as f64 * cfg.dt;
        step_seconds.push(start.elapsed().as_secs_f64());
        let last = n + 1 == n_steps;
        if last || (n + 1) % observe_every == 0 {
            nodal = stepper.nodal(&state)?;
            notify(&state, &nodal)?;
        }
    }
    Ok(RunOutcome {
        state,
        nodal,
        step_seconds,
    })
}
