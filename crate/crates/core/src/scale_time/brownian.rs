use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::rng::Increments;
use crate::schedule::{step_count, DEFAULT_MAX_STEPS};

/// Brownian motion on the uniform effective-time grid `k * dt_eff`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    dt_eff: f64,
    values: Vec<f64>,
}

impl BrownianPath {
    /// Wrap precomputed grid values; `values[0]` is the start point.
    pub fn from_values(dt_eff: f64, values: Vec<f64>) -> Result<Self> {
        check_positive("dt_eff", dt_eff)?;
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Overflow { index });
        }
        Ok(Self { dt_eff, values })
    }

    pub fn dt_eff(&self) -> f64 {
        self.dt_eff
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x0(&self) -> f64 {
        self.values[0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Effective time of grid index `k`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt_eff
    }

    /// Last grid time.
    pub fn horizon(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Sum of squared grid increments.
    pub fn quadratic_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
    }

    /// The path folded into `[0, 1]`: Brownian motion reflected at both ends.
    pub fn reflected_unit(&self) -> Self {
        Self {
            dt_eff: self.dt_eff,
            values: self.values.iter().map(|&v| fold_unit(v)).collect(),
        }
    }
}

/// Triangle wave of period 2 mapping the line onto `[0, 1]`.
#[inline]
pub fn fold_unit(v: f64) -> f64 {
    let r = v.rem_euclid(2.0);
    if r > 1.0 {
        2.0 - r
    } else {
        r
    }
}

/// Brownian motion from `x0` on `[0, horizon]`, increments from stream 0 of `seed`.
pub fn sample_brownian(x0: f64, dt_eff: f64, horizon: f64, seed: u64) -> Result<BrownianPath> {
    sample_brownian_stream(x0, dt_eff, horizon, seed, 0)
}

/// As [`sample_brownian`] but drawing from stream `index`.
pub fn sample_brownian_stream(x0: f64, dt_eff: f64, horizon: f64, seed: u64, index: u64) -> Result<BrownianPath> {
    check_positive("dt_eff", dt_eff)?;
    check_nonnegative("L", horizon)?;
    if !x0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x0",
            value: x0,
            expected: "a finite start value",
        });
    }
    let n = step_count(dt_eff, horizon, DEFAULT_MAX_STEPS)? as usize;
    let mut values = Vec::with_capacity(n + 1);
    values.push(x0);
    let mut x = x0;
    for dw in Increments::for_trajectory(seed, index, dt_eff).take(n) {
        x += dw;
        values.push(x);
    }
    Ok(BrownianPath { dt_eff, values })
}
