//! The scalar strong-measurement model
//! `dq = -lambda (q - p) dt + sqrt(gamma) q (1 - q) dW` on `[0, 1]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::belavkin::TwoStateReduction;
use crate::error::{check_positive, check_unit_interval, Error, Result};
use crate::path::Path;
use crate::rng::Increments;
use crate::schedule::{step_count, substeps, DEFAULT_MAX_STEPS, DEFAULT_STEP_CONSTANT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStateParams {
    lambda: f64,
    p: f64,
    gamma: f64,
}

impl TwoStateParams {
    pub fn new(lambda: f64, p: f64, gamma: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("gamma", gamma)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                expected: "a value in (0, 1)",
            });
        }
        Ok(Self { lambda, p, gamma })
    }

    /// Parameters for the direct integrator, where `lambda = 0` (absorbing
    /// boundaries) and `gamma = 0` (deterministic relaxation) are meaningful.
    pub fn for_integration(lambda: f64, p: f64, gamma: f64) -> Result<Self> {
        crate::error::check_nonnegative("lambda", lambda)?;
        crate::error::check_nonnegative("gamma", gamma)?;
        check_unit_interval("p", p)?;
        Ok(Self { lambda, p, gamma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.lambda, self.p, gamma)
    }

    /// Jump rate 0 -> 1 of the limiting chain.
    pub fn rate_up(&self) -> f64 {
        self.lambda * self.p
    }

    /// Jump rate 1 -> 0 of the limiting chain.
    pub fn rate_down(&self) -> f64 {
        self.lambda * (1.0 - self.p)
    }
}

/// Euler–Maruyama step, clamped to `[0, 1]`.
#[inline]
pub fn em_step(params: &TwoStateParams, q: f64, dt: f64, dw: f64) -> f64 {
    em_step_counted(params, q, dt, dw).0
}

/// Euler–Maruyama step; the flag reports whether the update was clamped.
#[inline]
pub fn em_step_counted(params: &TwoStateParams, q: f64, dt: f64, dw: f64) -> (f64, bool) {
    let next = q - params.lambda * (q - params.p) * dt + params.gamma.sqrt() * q * (1.0 - q) * dw;
    if next < 0.0 {
        (0.0, true)
    } else if next > 1.0 {
        (1.0, true)
    } else {
        (next, false)
    }
}

/// Joint step of the population `q = rho^{11}` and coherence `c = rho^{12}` of
/// the two-level thermal model, in physical units.
pub fn coherent_step(red: &TwoStateReduction, q: f64, c: Complex64, dt: f64, dw: f64) -> (f64, Complex64) {
    let sg = red.gamma_phys.sqrt();
    let lambda = red.lambda_plus + red.lambda_minus;
    let q1 = q - lambda * (q - red.lambda_plus / lambda) * dt + 2.0 * sg * q * (1.0 - q) * dw;
    let c1 = c - red.coherence_decay * c * dt + sg * (1.0 - 2.0 * q) * c * dw;
    (q1, c1)
}

/// Settings for [`simulate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub trajectory: u64,
    pub stride: usize,
    pub max_steps: u64,
    pub step_constant: f64,
}

impl SimConfig {
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

    pub fn trajectory(mut self, index: u64) -> Self {
        self.trajectory = index;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub path: Path,
    pub clamp_events: u64,
    pub steps: u64,
}

/// Simulate on `[0, T]`, returning `floor(T/dt) + 1` samples.
pub fn simulate(params: &TwoStateParams, q0: f64, dt: f64, horizon: f64, seed: u64) -> Result<Path> {
    simulate_with(params, q0, &SimConfig::new(dt, horizon, seed)).map(|s| s.path)
}

pub fn simulate_with(params: &TwoStateParams, q0: f64, cfg: &SimConfig) -> Result<Simulation> {
    check_unit_interval("q0", q0)?;
    let steps = step_count(cfg.dt, cfg.horizon, cfg.max_steps)?;
    let sub = substeps(cfg.dt, params.gamma, cfg.step_constant);
    let total = steps.saturating_mul(sub.count as u64);
    if total > cfg.max_steps {
        return Err(Error::StepBudget {
            requested: total,
            max: cfg.max_steps,
        });
    }
    let stride = cfg.stride.max(1) as u64;
    let kept = (steps / stride + 1) as usize;
    let mut times = Vec::with_capacity(kept);
    let mut values = Vec::with_capacity(kept);
    times.push(0.0);
    values.push(q0);
    let mut noise = Increments::for_trajectory(cfg.seed, cfg.trajectory, sub.dt);
    let mut q = q0;
    let mut clamp_events = 0;
    for k in 1..=steps {
        for _ in 0..sub.count {
            let (next, clamped) = em_step_counted(params, q, sub.dt, noise.next_increment());
            q = next;
            clamp_events += clamped as u64;
        }
        if k % stride == 0 {
            times.push(k as f64 * cfg.dt);
            values.push(q);
        }
    }
    Ok(Simulation {
        path: Path::from_parts_unchecked(times, values),
        clamp_events,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, p: f64, gamma: f64) -> TwoStateParams {
        TwoStateParams::for_integration(lambda, p, gamma).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(TwoStateParams::new(1.0, 0.3, 10.0).is_ok());
        assert!(TwoStateParams::new(0.0, 0.3, 10.0).is_err());
        assert!(TwoStateParams::new(1.0, 1.0, 10.0).is_err());
        assert!(TwoStateParams::new(1.0, 0.3, 0.0).is_err());
    }

    #[test]
    fn long_term_mean_is_a_fixed_point_without_noise() {
        let pr = params(1.0, 0.3, 100.0);
        assert_eq!(em_step(&pr, 0.3, 1e-3, 0.0), 0.3);
    }

    #[test]
    fn boundaries_absorb_without_mean_reversion() {
        let pr = params(0.0, 0.3, 100.0);
        for q in [0.0, 1.0] {
            for dw in [-1.0, 0.1, 2.0] {
                assert_eq!(em_step(&pr, q, 1e-3, dw), q);
            }
        }
    }

    #[test]
    fn deterministic_limit_is_exponential_relaxation() {
        let (lambda, p, q0) = (1.3, 0.3, 0.9);
        let pr = params(lambda, p, 0.0);
        let mut worst: [f64; 2] = [0.0; 2];
        for (slot, dt) in [1e-2, 5e-3].into_iter().enumerate() {
            let path = simulate(&pr, q0, dt, 3.0, 0).unwrap();
            for (t, q) in path.iter() {
                let exact = p + (q0 - p) * (-lambda * t).exp();
                worst[slot] = worst[slot].max((q - exact).abs());
            }
        }
        // first-order global error: halving dt halves the error
        assert!(worst[0] < 0.01);
        assert!((worst[0] / worst[1] - 2.0).abs() < 0.1, "{worst:?}");
    }

    #[test]
    fn zero_horizon_gives_single_point() {
        let path = simulate(&params(1.0, 0.3, 10.0), 0.42, 1e-3, 0.0, 3).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path.values()[0], 0.42);
    }

    #[test]
    fn noiseless_path_started_at_mean_is_constant() {
        let path = simulate(&params(1.0, 0.3, 0.0), 0.3, 1e-2, 1.0, 3).unwrap();
        assert_eq!(path.len(), 101);
        assert!(path.values().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn samples_stay_in_unit_interval() {
        let sim = simulate_with(&params(1.0, 0.3, 1e3), 0.5, &SimConfig::new(1e-4, 5.0, 11)).unwrap();
        assert!(sim.path.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(sim.path.len(), 50_001);
    }

    #[test]
    fn stride_thins_output_not_integration() {
        let pr = params(1.0, 0.3, 50.0);
        let full = simulate_with(&pr, 0.5, &SimConfig::new(1e-3, 1.0, 5)).unwrap();
        let thin = simulate_with(&pr, 0.5, &SimConfig::new(1e-3, 1.0, 5).stride(10)).unwrap();
        assert_eq!(thin.path.len(), 101);
        assert_eq!(thin.path.values()[100], full.path.values()[1000]);
    }

    #[test]
    fn martingale_without_mean_reversion() {
        let pr = params(0.0, 0.5, 4.0);
        let (q0, n) = (0.35, 2000);
        let finals: Vec<f64> = (0..n)
            .map(|i| {
                let cfg = SimConfig::new(1e-3, 1.0, 99).trajectory(i);
                *simulate_with(&pr, q0, &cfg).unwrap().path.values().last().unwrap()
            })
            .collect();
        let mean = finals.iter().sum::<f64>() / n as f64;
        let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - q0).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn step_budget_is_enforced() {
        let mut cfg = SimConfig::new(1e-3, 10.0, 0);
        cfg.max_steps = 100;
        assert!(matches!(
            simulate_with(&params(1.0, 0.3, 1.0), 0.5, &cfg),
            Err(Error::StepBudget { .. })
        ));
    }

    #[test]
    fn invalid_start_is_rejected() {
        assert!(simulate(&params(1.0, 0.3, 1.0), 1.5, 1e-3, 1.0, 0).is_err());
    }
}
