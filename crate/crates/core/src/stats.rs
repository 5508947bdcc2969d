//! Estimators that turn the limit theorems into numerical checks.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::path::Path;

/// Default hysteresis threshold for binarization.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// `integral f(t, X_t) dt` along the path by the trapezoid rule.
pub fn occupation_functional<F: Fn(f64, f64) -> f64>(path: &Path, f: F) -> f64 {
    let (t, v) = (path.times(), path.values());
    let mut prev = f(t[0], v[0]);
    let mut acc = 0.0;
    for i in 1..path.len() {
        let cur = f(t[i], v[i]);
        acc += 0.5 * (t[i] - t[i - 1]) * (prev + cur);
        prev = cur;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// Centered moving average over a time window.
    MovingAverage,
    /// Replace each sample by the mean of its block; blocks have the window's length.
    Blocks,
}

/// Centered moving average: each sample becomes the mean of the samples
/// within `window / 2` of it. Windows shorter than the grid spacing leave the
/// path unchanged.
pub fn smooth(path: &Path, window: f64) -> Result<Path> {
    smooth_with(path, window, Smoothing::MovingAverage)
}

pub fn smooth_with(path: &Path, window: f64, mode: Smoothing) -> Result<Path> {
    check_nonnegative("window", window)?;
    let (t, v) = (path.times(), path.values());
    let n = path.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in v {
        acc += x;
        prefix.push(acc);
    }
    // prefix differences can round outside the range of the path
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let mean = |a: usize, b: usize| -> f64 { ((prefix[b] - prefix[a]) / (b - a) as f64).clamp(lo, hi) };
    let mut out = Vec::with_capacity(n);
    match mode {
        Smoothing::MovingAverage => {
            let half = 0.5 * window;
            let (mut a, mut b) = (0, 0);
            for i in 0..n {
                while t[a] < t[i] - half {
                    a += 1;
                }
                while b < n && t[b] <= t[i] + half {
                    b += 1;
                }
                out.push(if b - a == 1 { v[i] } else { mean(a, b) });
            }
        }
        Smoothing::Blocks => {
            if window == 0.0 {
                return Ok(path.clone());
            }
            let mut a = 0;
            while a < n {
                let block = ((t[a] - t[0]) / window).floor();
                let mut b = a + 1;
                while b < n && ((t[b] - t[0]) / window).floor() == block {
                    b += 1;
                }
                let m = mean(a, b);
                out.extend(std::iter::repeat_n(m, b - a));
                a = b;
            }
        }
    }
    Ok(Path::from_parts_unchecked(t.to_vec(), out))
}

/// Empirical jump rates of a binarized path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// `0 -> 1` rate; withheld when no such transition was seen.
    pub w01_hat: Option<f64>,
    pub w10_hat: Option<f64>,
    pub n01: usize,
    pub n10: usize,
    /// Time spent in each binarized state.
    pub time0: f64,
    pub time1: f64,
    /// Three standard errors, `3 w / sqrt(n)`.
    pub w01_halfwidth: Option<f64>,
    pub w10_halfwidth: Option<f64>,
}

/// Hysteresis binarization: the state becomes 1 once the path reaches
/// `1 - threshold` and 0 once it falls to `threshold`. Undetermined before
/// the first such crossing.
#[derive(Debug, Clone, Copy)]
pub struct Hysteresis {
    threshold: f64,
    state: Option<u8>,
}

impl Hysteresis {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 0.5) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                value: threshold,
                expected: "a threshold in (0, 0.5)",
            });
        }
        Ok(Self { threshold, state: None })
    }

    /// Feed one value; returns the state after it.
    #[inline]
    pub fn update(&mut self, x: f64) -> Option<u8> {
        if x >= 1.0 - self.threshold {
            self.state = Some(1);
        } else if x <= self.threshold {
            self.state = Some(0);
        }
        self.state
    }
}

/// Transition counts over time in state, after hysteresis binarization.
/// Smooth the path first.
pub fn estimate_jump_rates(path: &Path, threshold: f64) -> Result<RateEstimate> {
    let mut hyst = Hysteresis::new(threshold)?;
    let (t, v) = (path.times(), path.values());
    let mut state = hyst.update(v[0]);
    let (mut n, mut time) = ([0usize; 2], [0.0; 2]);
    for i in 1..path.len() {
        if let Some(s) = state {
            time[s as usize] += t[i] - t[i - 1];
        }
        let next = hyst.update(v[i]);
        if let (Some(a), Some(b)) = (state, next) {
            if a != b {
                n[a as usize] += 1;
            }
        }
        state = next;
    }
    let rate = |k: usize, s: f64| (k >= 1 && s > 0.0).then(|| k as f64 / s);
    let (w01, w10) = (rate(n[0], time[0]), rate(n[1], time[1]));
    Ok(RateEstimate {
        w01_hat: w01,
        w10_hat: w10,
        n01: n[0],
        n10: n[1],
        time0: time[0],
        time1: time[1],
        w01_halfwidth: w01.map(|w| 3.0 * w / (n[0] as f64).sqrt()),
        w10_halfwidth: w10.map(|w| 3.0 * w / (n[1] as f64).sqrt()),
    })
}

/// Spike counts of a path, by the state the excursion starts and ends in.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpikeCounts {
    /// Excursions from the 0-neighborhood reaching `m`.
    pub up: usize,
    /// Excursions from the 1-neighborhood reaching `1 - m`.
    pub down: usize,
    /// Time attributed to each neighborhood (between leaving one and reaching the other).
    pub time0: f64,
    pub time1: f64,
}

/// Streaming spike counter. A spike is a maximal excursion that leaves the
/// `eta`-neighborhood of 0 (resp. 1), gets at least `m` away from it and
/// returns without visiting the other neighborhood.
#[derive(Debug, Clone)]
pub struct SpikeCounter {
    m: f64,
    eta: f64,
    home: Option<u8>,
    reached: bool,
    last_t: Option<f64>,
    counts: SpikeCounts,
}

impl SpikeCounter {
    pub fn new(m: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < m && m < 1.0 - eta) {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m,
                expected: "0 < eta < m < 1 - eta",
            });
        }
        Ok(Self {
            m,
            eta,
            home: None,
            reached: false,
            last_t: None,
            counts: SpikeCounts::default(),
        })
    }

    #[inline]
    pub fn push(&mut self, t: f64, x: f64) {
        if let (Some(h), Some(t0)) = (self.home, self.last_t) {
            if h == 0 {
                self.counts.time0 += t - t0;
            } else {
                self.counts.time1 += t - t0;
            }
        }
        self.last_t = Some(t);
        let at = if x <= self.eta {
            Some(0)
        } else if x >= 1.0 - self.eta {
            Some(1)
        } else {
            None
        };
        match (self.home, at) {
            (Some(h), Some(a)) if h == a => {
                if self.reached {
                    if h == 0 {
                        self.counts.up += 1;
                    } else {
                        self.counts.down += 1;
                    }
                }
                self.reached = false;
            }
            (_, Some(a)) => {
                self.home = Some(a);
                self.reached = false;
            }
            (Some(h), None) => {
                let dist = if h == 0 { x } else { 1.0 - x };
                self.reached |= dist >= self.m;
            }
            (None, None) => {}
        }
    }

    pub fn counts(&self) -> SpikeCounts {
        self.counts
    }
}

/// Neighborhood used by [`count_spikes`].
pub const DEFAULT_SPIKE_NEIGHBORHOOD: f64 = 1e-3;

pub fn count_spikes(path: &Path, m: f64) -> Result<SpikeCounts> {
    let mut c = SpikeCounter::new(m, DEFAULT_SPIKE_NEIGHBORHOOD.min(0.5 * m))?;
    for (t, x) in path.iter() {
        c.push(t, x);
    }
    Ok(c.counts())
}

/// `sup_x |F_n(x) - F(x)|`, checking both sides of every jump of `F_n`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    if let Some(&x) = xs.iter().find(|x| x.is_nan()) {
        return Err(Error::InvalidParameter {
            name: "sample",
            value: x,
            expected: "non-NaN samples",
        });
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i + 1;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let (before, after) = (i as f64 / n, j as f64 / n);
        d = d.max((after - cdf(x)).abs()).max((before - cdf(x.next_down())).abs());
        i = j;
    }
    Ok(d.min(1.0))
}

/// Mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, f64::INFINITY));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Checks a time window against a sample spacing; used by callers that
/// require `window > spacing`.
pub fn check_window(path: &Path, window: f64) -> Result<()> {
    check_positive("window", window)?;
    if window <= path.min_spacing() {
        return Err(Error::InvalidParameter {
            name: "window",
            value: window,
            expected: "a window longer than the sample spacing",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spike_limit::{sample_q, sample_spikes};

    #[test]
    fn occupation_of_constants() {
        let p = Path::uniform(0.0, 0.01, vec![0.0; 301]).unwrap();
        assert!((occupation_functional(&p, |_, _| 1.0) - 3.0).abs() < 1e-12);
        assert_eq!(occupation_functional(&p, |_, x| (x > 0.5) as u8 as f64), 0.0);
    }

    #[test]
    fn occupation_is_linear_and_additive() {
        let values: Vec<f64> = (0..101).map(|i| 0.5 + 0.4 * (i as f64 * 0.3).sin()).collect();
        let p = Path::uniform(0.0, 0.1, values.clone()).unwrap();
        let f = |t: f64, x: f64| t * x;
        let g = |_: f64, x: f64| x * x;
        let lin = occupation_functional(&p, |t, x| 2.0 * f(t, x) - 3.0 * g(t, x));
        assert!((lin - (2.0 * occupation_functional(&p, f) - 3.0 * occupation_functional(&p, g))).abs() < 1e-12);
        let left = Path::uniform(0.0, 0.1, values[..51].to_vec()).unwrap();
        let right = Path::uniform(5.0, 0.1, values[50..].to_vec()).unwrap();
        let whole = occupation_functional(&p, g);
        assert!((whole - occupation_functional(&left, g) - occupation_functional(&right, g)).abs() < 1e-12);
    }

    #[test]
    fn smoothing_basics() {
        let c = Path::uniform(0.0, 0.01, vec![0.3; 200]).unwrap();
        assert!(smooth(&c, 0.2).unwrap().values().iter().all(|&x| (x - 0.3).abs() < 1e-15));
        let values: Vec<f64> = (0..200).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let p = Path::uniform(0.0, 0.01, values).unwrap();
        assert_eq!(smooth(&p, 0.005).unwrap(), p);
        let s = smooth(&p, 0.1).unwrap();
        let (lo, hi) = (0.0, 12.0 / 13.0);
        assert!(s.values().iter().all(|&x| x >= lo && x <= hi));
        let shifted = Path::uniform(0.0, 0.01, p.values().iter().map(|x| 0.5 * x + 0.25).collect()).unwrap();
        let s2 = smooth(&shifted, 0.1).unwrap();
        for (a, b) in s.values().iter().zip(s2.values()) {
            assert!((0.5 * a + 0.25 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn block_smoothing() {
        let p = Path::uniform(0.0, 1.0, vec![0.0, 1.0, 0.5, 0.5, 1.0]).unwrap();
        let s = smooth_with(&p, 2.0, Smoothing::Blocks).unwrap();
        assert_eq!(s.values(), &[0.5, 0.5, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn rates_from_an_exact_chain() {
        let (lambda, p) = (1.0, 0.3);
        let chain = sample_q(lambda, p, 0.3, 25_000.0, 11).unwrap();
        let path = chain.to_path(0.01).unwrap();
        let est = estimate_jump_rates(&path, DEFAULT_THRESHOLD).unwrap();
        assert!(est.n01 > 4000);
        let (w01, w10) = (est.w01_hat.unwrap(), est.w10_hat.unwrap());
        assert!((w01 - 0.3).abs() < est.w01_halfwidth.unwrap() + 0.01);
        assert!((w10 - 0.7).abs() < est.w10_halfwidth.unwrap() + 0.02);
    }

    #[test]
    fn rates_withheld_without_transitions() {
        let p = Path::uniform(0.0, 0.1, vec![0.05; 100]).unwrap();
        let est = estimate_jump_rates(&p, 0.2).unwrap();
        assert_eq!(est.w01_hat, None);
        assert_eq!(est.w10_hat, None);
        assert!((est.time0 - 9.9).abs() < 1e-9);
        assert!(estimate_jump_rates(&p, 0.6).is_err());
    }

    #[test]
    fn hysteresis_ignores_shoulders() {
        let p = Path::uniform(0.0, 1.0, vec![0.0, 0.7, 0.1, 0.9, 0.5, 0.85, 0.1]).unwrap();
        let est = estimate_jump_rates(&p, 0.2).unwrap();
        assert_eq!((est.n01, est.n10), (1, 1));
    }

    #[test]
    fn spike_count_of_zero_path() {
        let p = Path::uniform(0.0, 0.1, vec![0.0; 50]).unwrap();
        assert_eq!(count_spikes(&p, 0.3).unwrap().up, 0);
    }

    #[test]
    fn spike_count_from_exact_spikes() {
        let chain = sample_q(1.0, 0.3, 0.0, 20.0, 3).unwrap();
        let spikes = sample_spikes(1.0, 0.3, &chain, 0.05, 7).unwrap();
        // draw every spike as a narrow tent on a fine grid
        let dt = 1e-4;
        let n = (chain.horizon() / dt) as usize;
        let mut values: Vec<f64> = (0..=n).map(|j| chain.state_at(j as f64 * dt) as f64).collect();
        let mut drawn = Vec::new();
        for e in &spikes.events {
            let j = (e.t / dt).round() as usize;
            // tents need clear ground on both sides
            if j < 3 || j + 3 > n || drawn.last().is_some_and(|&k| j < k + 6) || chain.state_at((j as f64 - 3.0) * dt) != e.state || chain.state_at((j as f64 + 3.0) * dt) != e.state {
                continue;
            }
            values[j] = if e.state == 0 { e.m } else { 1.0 - e.m };
            drawn.push(j);
        }
        let path = Path::uniform(0.0, dt, values).unwrap();
        for m in [0.1, 0.3, 0.5] {
            let want = drawn.iter().filter(|&&j| spikes.events.iter().any(|e| (e.t / dt).round() as usize == j && e.m >= m)).fold([0, 0], |mut acc, &j| {
                acc[chain.state_at(j as f64 * dt) as usize] += 1;
                acc
            });
            let got = count_spikes(&path, m).unwrap();
            assert_eq!([got.up, got.down], want, "m={m}");
        }
    }

    #[test]
    fn ks_edge_cases() {
        assert_eq!(ks_statistic(&[0.0], |x| (0.5 * (x + 1.0)).clamp(0.0, 1.0)).unwrap(), 0.5);
        let step = |x: f64| if x >= 2.0 { 1.0 } else { 0.0 };
        assert_eq!(ks_statistic(&[2.0; 10], step).unwrap(), 0.0);
        assert!(ks_statistic(&[], step).is_err());
    }

    #[test]
    fn ks_of_matching_samples_is_small() {
        use rand::Rng;
        let mut rng = crate::rng::stream(1, 0);
        let mut passes = 0;
        for _ in 0..50 {
            let xs: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
            let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
            passes += (d < 1.63 / (2000f64).sqrt()) as u32;
        }
        assert!(passes >= 47, "{passes}");
    }
}
