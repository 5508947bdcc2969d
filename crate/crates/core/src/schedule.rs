//! Step counts and the step-size policy shared by the Euler–Maruyama drivers.

use crate::error::{check_nonnegative, check_positive, Error, Result};

/// `c` in the default rule `dt = min(dt_user, c / gamma)`.
pub const DEFAULT_STEP_CONSTANT: f64 = 0.01;

/// Upper bound on integration steps for a single trajectory.
pub const DEFAULT_MAX_STEPS: u64 = 4_000_000_000;

/// Number of whole steps of size `dt` in `[0, horizon]`.
///
/// A relative slack of 1e-9 absorbs the representation error of ratios like
/// `200 / 1e-5`, which would otherwise floor one step short.
pub fn step_count(dt: f64, horizon: f64, max_steps: u64) -> Result<u64> {
    check_nonnegative("T", horizon)?;
    if horizon == 0.0 {
        return Ok(0);
    }
    check_positive("dt", dt)?;
    let ratio = horizon / dt;
    let steps = (ratio * (1.0 + 1e-9)).floor();
    if steps > max_steps as f64 {
        return Err(Error::StepBudget {
            requested: steps.min(u64::MAX as f64) as u64,
            max: max_steps,
        });
    }
    Ok(steps as u64)
}

/// How one output step is split into integration steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Substeps {
    pub count: u32,
    pub dt: f64,
}

/// Split `dt_user` so that every inner step satisfies `dt <= c / gamma`.
pub fn substeps(dt_user: f64, gamma: f64, step_constant: f64) -> Substeps {
    if gamma <= 0.0 || dt_user <= 0.0 {
        return Substeps { count: 1, dt: dt_user };
    }
    let cap = step_constant / gamma;
    let count = (dt_user / cap * (1.0 - 1e-12)).ceil().max(1.0) as u32;
    Substeps {
        count,
        dt: dt_user / count as f64,
    }
}
