//! Band estimators of Brownian local time and the mixed local-time clock.
//!
//! Local time at level `a` up to effective time `ell` is estimated as
//! `(1 / 2 eps) * Leb{u <= ell : |beta_u - a| < eps}`, with the occupation
//! measure read off the grid (left Riemann sum) and interpolated linearly
//! inside a grid step.

use super::brownian::BrownianPath;
use crate::error::{check_nonnegative, check_positive, Error, Result};

/// `max(sqrt(dt_eff), 1e-4)`.
pub fn default_band(dt_eff: f64) -> f64 {
    dt_eff.sqrt().max(1e-4)
}

fn horizon_check(beta: &BrownianPath, ell: f64) -> Result<()> {
    check_nonnegative("ell", ell)?;
    if ell > beta.horizon() * (1.0 + 1e-12) {
        return Err(Error::Horizon {
            needed: ell,
            available: beta.horizon(),
        });
    }
    Ok(())
}

/// Band estimate of `L^a_ell(beta)`.
pub fn local_time(beta: &BrownianPath, a: f64, ell: f64, eps: f64) -> Result<f64> {
    check_positive("epsilon", eps)?;
    horizon_check(beta, ell)?;
    let dt = beta.dt_eff();
    let steps = ell / dt;
    let whole = (steps.floor() as usize).min(beta.len() - 1);
    let frac = steps - whole as f64;
    let v = beta.values();
    let inside = |y: f64| (y - a).abs() < eps;
    let count = v[..whole].iter().filter(|&&y| inside(y)).count() as f64;
    let partial = if inside(v[whole]) { frac } else { 0.0 };
    Ok((count + partial) * dt / (2.0 * eps))
}

/// `tau_s = inf{ell : L^a_ell > s}`.
pub fn inverse_local_time(beta: &BrownianPath, a: f64, s: f64, eps: f64) -> Result<f64> {
    check_positive("epsilon", eps)?;
    check_nonnegative("s", s)?;
    let dt = beta.dt_eff();
    let inc = dt / (2.0 * eps);
    let mut acc = 0.0;
    for (j, &y) in beta.values()[..beta.len() - 1].iter().enumerate() {
        if (y - a).abs() < eps {
            if acc + inc > s {
                return Ok(beta.time(j) + dt * (s - acc).max(0.0) / inc);
            }
            acc += inc;
        }
    }
    Err(Error::Horizon {
        needed: s,
        available: acc,
    })
}

/// A maximal run of consecutive grid steps spent in one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockRun {
    /// First grid index in the band.
    pub start: usize,
    /// One past the last grid index in the band.
    pub end: usize,
    /// 0 or 1.
    pub level: u8,
    /// Clock value at `start`.
    pub clock_start: f64,
}

/// `C_ell = L^0_ell / (2 lambda p) + L^1_ell / (2 lambda (1 - p))` and its
/// right-continuous inverse `sigma_t = inf{ell : C_ell > t}`.
///
/// Stored as the runs of grid steps inside either band; `C` is flat between runs.
#[derive(Debug, Clone)]
pub struct MixedClock {
    dt_eff: f64,
    band: f64,
    increments: [f64; 2],
    runs: Vec<ClockRun>,
    len: usize,
}

#[inline]
pub(crate) fn band_level(y: f64, eps: f64) -> Option<u8> {
    if y.abs() < eps {
        Some(0)
    } else if (y - 1.0).abs() < eps {
        Some(1)
    } else {
        None
    }
}

/// Mixed clock with the default band width.
pub fn mixed_local_time_clock(beta: &BrownianPath, lambda: f64, p: f64) -> Result<MixedClock> {
    mixed_local_time_clock_with(beta, lambda, p, default_band(beta.dt_eff()))
}

pub fn mixed_local_time_clock_with(beta: &BrownianPath, lambda: f64, p: f64, eps: f64) -> Result<MixedClock> {
    build_clock(beta, lambda, p, eps, 2.0)
}

/// Mixed clock of a path reflected into `[0, 1]`.
///
/// At a reflecting wall the band `[0, eps)` is one-sided, so the boundary
/// local time is `(1 / eps) * Leb{beta < eps}`. With this normalization the
/// holding times have the same law as for the unreflected construction.
pub fn mixed_local_time_clock_reflected(beta: &BrownianPath, lambda: f64, p: f64, eps: f64) -> Result<MixedClock> {
    if let Some(index) = beta.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta.values()[index],
            expected: "a path reflected into [0, 1]",
        });
    }
    build_clock(beta, lambda, p, eps, 1.0)
}

fn build_clock(beta: &BrownianPath, lambda: f64, p: f64, eps: f64, band_measure: f64) -> Result<MixedClock> {
    check_positive("lambda", lambda)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            expected: "a value in (0, 1)",
        });
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: eps,
            expected: "a band half-width in (0, 0.5)",
        });
    }
    let dt = beta.dt_eff();
    let unit = dt / (band_measure * eps);
    let increments = [unit / (2.0 * lambda * p), unit / (2.0 * lambda * (1.0 - p))];
    let mut runs: Vec<ClockRun> = Vec::new();
    let mut clock = 0.0;
    let mut open: Option<(usize, u8)> = None;
    let v = beta.values();
    // the last grid point opens no step
    for (k, &y) in v[..v.len() - 1].iter().enumerate() {
        let level = band_level(y, eps);
        match (open, level) {
            (Some((_, a)), Some(b)) if a == b => continue,
            _ => {}
        }
        if let Some((start, a)) = open.take() {
            runs.push(ClockRun {
                start,
                end: k,
                level: a,
                clock_start: clock,
            });
            clock += (k - start) as f64 * increments[a as usize];
        }
        open = level.map(|l| (k, l));
    }
    if let Some((start, a)) = open {
        runs.push(ClockRun {
            start,
            end: v.len() - 1,
            level: a,
            clock_start: clock,
        });
    }
    Ok(MixedClock {
        dt_eff: dt,
        band: eps,
        increments,
        runs,
        len: v.len(),
    })
}

impl MixedClock {
    pub fn dt_eff(&self) -> f64 {
        self.dt_eff
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn runs(&self) -> &[ClockRun] {
        &self.runs
    }

    /// Clock increment per grid step in band 0 and band 1.
    pub fn increments(&self) -> [f64; 2] {
        self.increments
    }

    #[inline]
    fn run_end_clock(&self, r: &ClockRun) -> f64 {
        r.clock_start + (r.end - r.start) as f64 * self.increments[r.level as usize]
    }

    /// `C` at the end of the path.
    pub fn total(&self) -> f64 {
        self.runs.last().map_or(0.0, |r| self.run_end_clock(r))
    }

    /// `C_ell`, linear inside a grid step.
    pub fn value_at(&self, ell: f64) -> f64 {
        let k = ell / self.dt_eff;
        let i = self.runs.partition_point(|r| (r.start as f64) <= k);
        if i == 0 {
            return 0.0;
        }
        let r = &self.runs[i - 1];
        let inside = (k - r.start as f64).min((r.end - r.start) as f64);
        r.clock_start + inside * self.increments[r.level as usize]
    }

    /// `C` at every grid index, in order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let mut r = 0;
        (0..self.len).map(move |k| {
            while r < self.runs.len() && self.runs[r].end < k {
                r += 1;
            }
            match self.runs.get(r) {
                Some(run) if run.start <= k => run.clock_start + (k - run.start) as f64 * self.increments[run.level as usize],
                Some(run) => run.clock_start,
                None => self.total(),
            }
        })
    }

    fn run_index(&self, t: f64) -> Result<usize> {
        check_nonnegative("t", t)?;
        let total = self.total();
        if t >= total {
            return Err(Error::Horizon {
                needed: t,
                available: total,
            });
        }
        Ok(self.runs.partition_point(|r| self.run_end_clock(r) <= t))
    }

    /// `sigma_t`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let r = &self.runs[self.run_index(t)?];
        let steps = (t - r.clock_start).max(0.0) / self.increments[r.level as usize];
        Ok((r.start as f64 + steps) * self.dt_eff)
    }

    /// The level `beta` sits at at effective time `sigma_t`.
    pub fn state_at(&self, t: f64) -> Result<u8> {
        Ok(self.runs[self.run_index(t)?].level)
    }

    /// Initial level and the real times at which the level changes before `horizon`.
    pub fn jumps(&self, horizon: f64) -> Result<(u8, Vec<f64>)> {
        check_positive("H", horizon)?;
        let total = self.total();
        if horizon > total {
            return Err(Error::Horizon {
                needed: horizon,
                available: total,
            });
        }
        let mut level = self.runs[0].level;
        let initial = level;
        let mut times = Vec::new();
        for r in &self.runs[1..] {
            if r.clock_start >= horizon {
                break;
            }
            if r.level != level {
                times.push(r.clock_start);
                level = r.level;
            }
        }
        Ok((initial, times))
    }
}
