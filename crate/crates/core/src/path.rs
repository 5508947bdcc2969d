//! Sampled real-valued trajectories on `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the `[0, 1]` state space.
pub const RANGE_SLACK: f64 = 1e-12;

/// A trajectory sampled on a (possibly non-uniform) strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Path {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "time",
                value: t,
                expected: "finite nonnegative sample times",
            });
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "time",
                value: w[1],
                expected: "strictly increasing sample times",
            });
        }
        if let Some(&v) = values
            .iter()
            .find(|v| !(**v >= -RANGE_SLACK && **v <= 1.0 + RANGE_SLACK))
        {
            return Err(Error::InvalidParameter {
                name: "value",
                value: v,
                expected: "values in [0, 1]",
            });
        }
        Ok(Self { times, values })
    }

    /// Uniform grid `t0, t0 + dt, ...` with one time per value.
    pub fn uniform(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(times, values)
    }

    /// Internal constructor for grids that are valid by construction.
    pub(crate) fn from_parts_unchecked(times: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), values.len());
        Self { times, values }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Smallest spacing between consecutive samples (infinite for one sample).
    pub fn min_spacing(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Linear interpolation at time `t`, clamped to the end values outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0];
        }
        if k == self.times.len() {
            return self.values[k - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Path::new(vec![0.0, 0.0], vec![0.1, 0.2]).is_err());
        assert!(Path::new(vec![0.0, 1.0], vec![0.1]).is_err());
        assert!(Path::new(vec![0.0], vec![1.5]).is_err());
        assert!(Path::new(vec![], vec![]).is_err());
        assert!(Path::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn interpolates_linearly() {
        let p = Path::uniform(0.0, 1.0, vec![0.0, 1.0, 0.5]).unwrap();
        assert_eq!(p.value_at(0.5), 0.5);
        assert_eq!(p.value_at(1.5), 0.75);
        assert_eq!(p.value_at(9.0), 0.5);
        assert_eq!(p.value_at(-1.0), 0.0);
    }
}
