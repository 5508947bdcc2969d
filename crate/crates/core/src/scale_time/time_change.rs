//! The time change `dT^{-1}_ell = phi(beta_ell) d ell` and the coupled
//! process `q_t = h^{-1}(beta_{T_t})`.

use super::brownian::BrownianPath;
use super::scale::ScaleFunction;
use crate::error::{check_positive, Error, Result};
use crate::graph_metric::{ColumnBinner, PlanarSet};
use crate::path::Path;
use crate::schedule::{step_count, DEFAULT_MAX_STEPS};

/// One effective-time grid point of the coupled construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledSample {
    pub index: usize,
    /// Effective time.
    pub ell: f64,
    pub beta: f64,
    /// Real time `T^{-1}_ell`.
    pub t: f64,
    /// `h^{-1}(beta_ell)`.
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    /// Samples visited.
    pub samples: usize,
    /// `phi` evaluations that hit the cap.
    pub capped: u64,
    /// Real time at the last visited sample.
    pub t_end: f64,
}

/// Walk `beta` accumulating `T^{-1}` by the trapezoid rule, calling `visit`
/// on every grid point up to and including the first with `t >= horizon`.
pub fn sweep<F: FnMut(&CoupledSample)>(beta: &BrownianPath, scale: &ScaleFunction, horizon: f64, mut visit: F) -> Result<SweepSummary> {
    let dt = beta.dt_eff();
    let mut cursor = scale.cursor();
    let mut t = 0.0;
    let mut prev_phi = 0.0;
    let mut samples = 0;
    for (k, &b) in beta.values().iter().enumerate() {
        let pt = cursor.eval(b)?;
        if k > 0 {
            t += 0.5 * dt * (prev_phi + pt.phi);
            if !t.is_finite() {
                return Err(Error::Overflow { index: k });
            }
        }
        prev_phi = pt.phi;
        visit(&CoupledSample {
            index: k,
            ell: beta.time(k),
            beta: b,
            t,
            x: pt.x,
        });
        samples += 1;
        if t >= horizon {
            break;
        }
    }
    Ok(SweepSummary {
        samples,
        capped: cursor.capped(),
        t_end: t,
    })
}

/// `T^{-1}` on the effective-time grid of a Brownian path.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    dt_eff: f64,
    tinv: Vec<f64>,
    capped: u64,
}

impl TimeChange {
    pub fn dt_eff(&self) -> f64 {
        self.dt_eff
    }

    /// `T^{-1}` at grid index `k` is `values()[k]`.
    pub fn values(&self) -> &[f64] {
        &self.tinv
    }

    pub fn ell(&self, k: usize) -> f64 {
        k as f64 * self.dt_eff
    }

    pub fn len(&self) -> usize {
        self.tinv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tinv.is_empty()
    }

    /// Real time reached at the end of the path.
    pub fn total(&self) -> f64 {
        self.tinv[self.tinv.len() - 1]
    }

    pub fn capped(&self) -> u64 {
        self.capped
    }

    /// `T_t`, the effective time at which real time `t` is reached.
    pub fn effective_time(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t > self.total() {
            return Err(Error::Horizon {
                needed: t,
                available: self.total(),
            });
        }
        let k = self.tinv.partition_point(|&v| v < t);
        if k == 0 {
            return Ok(0.0);
        }
        let (a, b) = (self.tinv[k - 1], self.tinv[k]);
        let s = if b > a { (t - a) / (b - a) } else { 1.0 };
        Ok(self.ell(k - 1) + s * self.dt_eff)
    }
}

pub fn time_change_inverse(beta: &BrownianPath, scale: &ScaleFunction) -> Result<TimeChange> {
    let mut tinv = Vec::with_capacity(beta.len());
    let summary = sweep(beta, scale, f64::INFINITY, |s| tinv.push(s.t))?;
    Ok(TimeChange {
        dt_eff: beta.dt_eff(),
        tinv,
        capped: summary.capped,
    })
}

fn exhausted(beta: &BrownianPath, horizon: f64, reached: f64) -> Error {
    // linear extrapolation of the clock gives the effective time to ask for
    let needed = if reached > 0.0 { beta.horizon() * horizon / reached } else { f64::INFINITY };
    Error::Horizon {
        needed,
        available: beta.horizon(),
    }
}

/// `q_t = h^{-1}(beta_{T_t})` on the real-time grid `j * dt_out`, `0 <= j * dt_out <= horizon`.
///
/// `beta` is interpolated linearly between grid points. Fails with
/// [`Error::Horizon`] carrying the estimated effective horizon needed when
/// `beta` is too short.
pub fn coupled_trajectory(beta: &BrownianPath, scale: &ScaleFunction, horizon: f64, dt_out: f64) -> Result<Path> {
    check_positive("dt", dt_out)?;
    let n = step_count(dt_out, horizon, DEFAULT_MAX_STEPS)? as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut cursor = scale.cursor();
    let mut prev: Option<CoupledSample> = None;
    let mut failure = None;
    let summary = sweep(beta, scale, horizon, |s| {
        if failure.is_some() {
            return;
        }
        while times.len() <= n {
            let target = times.len() as f64 * dt_out;
            if target > s.t {
                break;
            }
            let b = match prev {
                Some(p) if s.t > p.t => p.beta + (target - p.t) / (s.t - p.t) * (s.beta - p.beta),
                _ => s.beta,
            };
            match cursor.eval(b) {
                Ok(pt) => {
                    times.push(target);
                    values.push(pt.x);
                }
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            }
        }
        prev = Some(*s);
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if times.len() <= n {
        return Err(exhausted(beta, horizon, summary.t_end));
    }
    Ok(Path::from_parts_unchecked(times, values))
}

/// Graph of `t -> q_t` on `[0, horizon]` from every effective-time grid
/// point, binned into columns of width `delta * horizon`.
pub fn coupled_graph(beta: &BrownianPath, scale: &ScaleFunction, horizon: f64, delta: f64) -> Result<PlanarSet> {
    let mut binner = ColumnBinner::new(horizon, delta)?;
    let summary = sweep(beta, scale, horizon, |s| binner.push(s.t, s.x))?;
    if summary.t_end < horizon {
        return Err(exhausted(beta, horizon, summary.t_end));
    }
    binner.finish()
}
