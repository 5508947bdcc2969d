//! Belavkin (stochastic master) equations in `n` dimensions and their
//! weak-coupling thermal reduction.

mod density;
mod model;
mod thermal;

pub use density::{
    cmatrix_from_pairs, cvector_from_pairs, hermiticity_defect, hermitize, min_eigenvalue, CMatrix, DensityMatrix, PopulationVector,
    DEFAULT_PSD_TOL, HERMITIAN_TOL, TRACE_TOL,
};
pub use model::{em_step_matrix, em_step_matrix_report, innovation, lindblad_dissipator, BelavkinModel, StepReport};
pub use thermal::{
    componentwise_step, population_step, reduce_two_state, thermal_generator, PopulationStep, ThermalModel,
    TwoStateReduction,
};

use crate::error::{Error, Result};
use crate::rng::Increments;
use crate::schedule::{step_count, substeps, DEFAULT_MAX_STEPS, DEFAULT_STEP_CONSTANT};

/// Integration settings for a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Index of the trajectory inside an ensemble; selects the random stream.
    pub trajectory: u64,
    /// Keep every `stride`-th output sample.
    pub stride: usize,
    pub max_steps: u64,
    /// `c` in `dt <= c / gamma`; output steps are split into substeps as needed.
    pub step_constant: f64,
}

impl RunConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon,
            seed,
            trajectory: 0,
            stride: 1,
            max_steps: DEFAULT_MAX_STEPS,
            step_constant: DEFAULT_STEP_CONSTANT,
        }
    }
}

/// Retained samples of a matrix trajectory with integration diagnostics.
#[derive(Debug, Clone)]
pub struct MatrixTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest `|Tr - 1|` of the raw update over all steps.
    pub max_trace_defect: f64,
    pub steps: u64,
}

/// `floor(T/dt) + 1` states from `rho0`, driven by stream `(seed, 0)`.
pub fn simulate_belavkin(
    model: &BelavkinModel,
    rho0: &DensityMatrix,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<Vec<DensityMatrix>> {
    simulate_belavkin_with(model, rho0, &RunConfig::new(dt, horizon, seed)).map(|t| t.states)
}

pub fn simulate_belavkin_with(model: &BelavkinModel, rho0: &DensityMatrix, cfg: &RunConfig) -> Result<MatrixTrajectory> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    let steps = step_count(cfg.dt, cfg.horizon, cfg.max_steps)?;
    let sub = substeps(cfg.dt, model.gamma(), cfg.step_constant);
    if steps.saturating_mul(sub.count as u64) > cfg.max_steps {
        return Err(Error::StepBudget {
            requested: steps.saturating_mul(sub.count as u64),
            max: cfg.max_steps,
        });
    }
    let stride = cfg.stride.max(1) as u64;
    let mut noise = Increments::for_trajectory(cfg.seed, cfg.trajectory, sub.dt);
    let mut rho = rho0.clone();
    let mut times = vec![0.0];
    let mut states = vec![rho.clone()];
    let mut max_trace_defect = 0.0_f64;
    for k in 1..=steps {
        for s in 0..sub.count {
            let report = em_step_matrix_report(model, &rho, sub.dt, noise.next_increment()).map_err(|e| match e {
                Error::NotPositive { eigenvalue, .. } => Error::NotPositive {
                    step: Some(((k - 1) * sub.count as u64 + s as u64) as usize),
                    eigenvalue,
                },
                other => other,
            })?;
            max_trace_defect = max_trace_defect.max((report.raw_trace - 1.0).norm());
            rho = report.state;
        }
        if k % stride == 0 {
            times.push(k as f64 * cfg.dt);
            states.push(rho.clone());
        }
    }
    Ok(MatrixTrajectory {
        times,
        states,
        max_trace_defect,
        steps,
    })
}
