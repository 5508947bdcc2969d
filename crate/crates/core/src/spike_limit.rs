//! Samplers for the strong-measurement limit: the two-state jump chain `Q`,
//! its spike decorations, and the limit graph built from a Brownian path.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{check_positive, check_unit_interval, Error, Result};
use crate::graph_metric::{ColumnBinner, PlanarSet};
use crate::path::Path;
use crate::rng::{open_unit, stream};
use crate::scale_time::{clamp_inverse, default_band, mixed_local_time_clock_with, BrownianPath, MixedClock};

/// Default truncation of spike maxima.
pub const DEFAULT_M_MIN: f64 = 1e-3;

fn check_rates(lambda: f64, p: f64) -> Result<()> {
    check_positive("lambda", lambda)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            expected: "a value in (0, 1)",
        });
    }
    Ok(())
}

/// A càdlàg path on `[0, horizon)` alternating between 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChain {
    initial_state: u8,
    jump_times: Vec<f64>,
    horizon: f64,
}

/// A maximal interval of constant state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch {
    pub start: f64,
    pub end: f64,
    pub state: u8,
    /// False for the last epoch, which is cut by the horizon.
    pub complete: bool,
}

impl JumpChain {
    pub fn new(initial_state: u8, jump_times: Vec<f64>, horizon: f64) -> Result<Self> {
        check_positive("H", horizon)?;
        if initial_state > 1 {
            return Err(Error::InvalidParameter {
                name: "initial_state",
                value: initial_state as f64,
                expected: "0 or 1",
            });
        }
        let increasing = jump_times.windows(2).all(|w| w[0] < w[1]);
        let inside = jump_times.first().is_none_or(|&t| t > 0.0) && jump_times.last().is_none_or(|&t| t < horizon);
        if !(increasing && inside) {
            return Err(Error::InvalidParameter {
                name: "jump_times",
                value: jump_times.first().copied().unwrap_or(f64::NAN),
                expected: "strictly increasing times in (0, H)",
            });
        }
        Ok(Self {
            initial_state,
            jump_times,
            horizon,
        })
    }

    pub fn initial_state(&self) -> u8 {
        self.initial_state
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// State entered at each jump.
    pub fn states(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.jump_times.len()).map(move |i| self.initial_state ^ (((i + 1) % 2) as u8))
    }

    pub fn state_at(&self, t: f64) -> u8 {
        let jumps = self.jump_times.partition_point(|&s| s <= t);
        self.initial_state ^ ((jumps % 2) as u8)
    }

    pub fn epochs(&self) -> impl Iterator<Item = Epoch> + '_ {
        let n = self.jump_times.len();
        (0..=n).map(move |i| Epoch {
            start: if i == 0 { 0.0 } else { self.jump_times[i - 1] },
            end: if i == n { self.horizon } else { self.jump_times[i] },
            state: self.initial_state ^ ((i % 2) as u8),
            complete: i < n,
        })
    }

    /// Lengths of completed epochs, by state.
    pub fn holding_times(&self) -> [Vec<f64>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for e in self.epochs().filter(|e| e.complete) {
            out[e.state as usize].push(e.end - e.start);
        }
        out
    }

    /// Total time spent in each state.
    pub fn occupation(&self) -> [f64; 2] {
        let mut out = [0.0, 0.0];
        for e in self.epochs() {
            out[e.state as usize] += e.end - e.start;
        }
        out
    }

    /// Samples on the grid `j * dt`, `j * dt <= horizon`.
    pub fn to_path(&self, dt: f64) -> Result<Path> {
        let n = crate::schedule::step_count(dt, self.horizon, crate::schedule::DEFAULT_MAX_STEPS)? as usize;
        let times: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
        let mut values = Vec::with_capacity(n + 1);
        let mut jumps = 0;
        for &t in &times {
            while jumps < self.jump_times.len() && self.jump_times[jumps] <= t {
                jumps += 1;
            }
            values.push((self.initial_state ^ ((jumps % 2) as u8)) as f64);
        }
        Ok(Path::from_parts_unchecked(times, values))
    }
}

/// The chain with rates `0 -> 1: lambda p`, `1 -> 0: lambda (1 - p)` and
/// `P(Q_0 = 1) = x0`, on `[0, horizon)`.
pub fn sample_q(lambda: f64, p: f64, x0: f64, horizon: f64, seed: u64) -> Result<JumpChain> {
    sample_q_with(lambda, p, x0, horizon, &mut stream(seed, 0))
}

pub fn sample_q_with<R: Rng + ?Sized>(lambda: f64, p: f64, x0: f64, horizon: f64, rng: &mut R) -> Result<JumpChain> {
    check_rates(lambda, p)?;
    check_unit_interval("x0", x0)?;
    check_positive("H", horizon)?;
    let initial = (open_unit(rng) < x0) as u8;
    let holds = [Exp::new(lambda * p).expect("positive rate"), Exp::new(lambda * (1.0 - p)).expect("positive rate")];
    let mut state = initial;
    let mut t = 0.0;
    let mut jumps = Vec::new();
    loop {
        t += holds[state as usize].sample(rng);
        if t >= horizon {
            break;
        }
        jumps.push(t);
        state ^= 1;
    }
    Ok(JumpChain {
        initial_state: initial,
        jump_times: jumps,
        horizon,
    })
}

/// The spike at time 0 for the chain started from `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstSpike {
    /// `x0` in {0, 1}: the spike is the point `{x0}`.
    Point(f64),
    /// `[low, 1]`, with probability `x0`.
    UpToOne { low: f64 },
    /// `[0, high]`, with probability `1 - x0`.
    DownToZero { high: f64 },
}

impl FirstSpike {
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            FirstSpike::Point(x) => (x, x),
            FirstSpike::UpToOne { low } => (low, 1.0),
            FirstSpike::DownToZero { high } => (0.0, high),
        }
    }
}

/// Inverse-CDF draw of the first spike: `[y, 1]` with density
/// `(1 - x)(1 - y)^-2` on `(0, x)`, `[0, y]` with density `x y^-2` on `(x, 1)`.
pub fn sample_first_spike<R: Rng + ?Sized>(x0: f64, rng: &mut R) -> Result<FirstSpike> {
    check_unit_interval("x0", x0)?;
    if x0 == 0.0 || x0 == 1.0 {
        return Ok(FirstSpike::Point(x0));
    }
    let u = open_unit(rng);
    let v = open_unit(rng);
    Ok(if u < x0 {
        FirstSpike::UpToOne {
            low: v * x0 / (1.0 - x0 + v * x0),
        }
    } else {
        FirstSpike::DownToZero {
            high: x0 / (1.0 - v * (1.0 - x0)),
        }
    })
}

/// One spike: an upward segment `[0, m]` during a state-0 epoch or a
/// downward one `[1 - m, 1]` during a state-1 epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub t: f64,
    pub state: u8,
    pub m: f64,
}

impl SpikeEvent {
    pub fn interval(&self) -> (f64, f64) {
        if self.state == 0 {
            (0.0, self.m)
        } else {
            (1.0 - self.m, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSet {
    pub events: Vec<SpikeEvent>,
    pub m_min: f64,
}

impl SpikeSet {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Spikes with maximum at least `m`, by state.
    pub fn count_above(&self, m: f64) -> [usize; 2] {
        let mut out = [0, 0];
        for e in self.events.iter().filter(|e| e.m >= m) {
            out[e.state as usize] += 1;
        }
        out
    }
}

fn check_m_min(m_min: f64) -> Result<()> {
    if m_min > 0.0 && m_min < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "m_min",
            value: m_min,
            expected: "a truncation level in (0, 1)",
        })
    }
}

/// Poisson spikes with intensity `rate * Leb x dm / m^2` on `[m_min, 1)` in
/// every epoch, where `rate` is the epoch's exit rate.
pub fn sample_spikes(lambda: f64, p: f64, chain: &JumpChain, m_min: f64, seed: u64) -> Result<SpikeSet> {
    sample_spikes_with(lambda, p, chain, m_min, &mut stream(seed, 1))
}

pub fn sample_spikes_with<R: Rng + ?Sized>(lambda: f64, p: f64, chain: &JumpChain, m_min: f64, rng: &mut R) -> Result<SpikeSet> {
    check_rates(lambda, p)?;
    check_m_min(m_min)?;
    let tail = 1.0 / m_min - 1.0;
    let rates = [lambda * p, lambda * (1.0 - p)];
    let mut events = Vec::new();
    for epoch in chain.epochs() {
        let mean = rates[epoch.state as usize] * (epoch.end - epoch.start) * tail;
        if mean <= 0.0 {
            continue;
        }
        let count = Poisson::new(mean).map_err(|_| Error::InvalidParameter {
            name: "m_min",
            value: m_min,
            expected: "a spike intensity the Poisson sampler accepts",
        })?;
        let n = count.sample(rng) as usize;
        let first = events.len();
        for _ in 0..n {
            let t = epoch.start + open_unit(rng) * (epoch.end - epoch.start);
            let m = 1.0 / (1.0 + open_unit(rng) * tail);
            events.push(SpikeEvent { t, state: epoch.state, m });
        }
        events[first..].sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    Ok(SpikeSet { events, m_min })
}

/// Conditional tail `P(M >= m | M >= m_min)`.
pub fn maxima_tail(m: f64, m_min: f64) -> f64 {
    if m <= m_min {
        1.0
    } else if m >= 1.0 {
        0.0
    } else {
        (1.0 / m - 1.0) / (1.0 / m_min - 1.0)
    }
}

/// The limit graph of a Brownian path: the chain `Q` read off the mixed
/// local-time clock, plus one column per excursion of `beta` away from the
/// level bands.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitGraph {
    pub chain: JumpChain,
    /// Columns `(t, lo, hi)`; every column contains `Q_t` or `Q_{t-}`.
    pub columns: Vec<crate::graph_metric::Column>,
}

impl LimitGraph {
    pub fn horizon(&self) -> f64 {
        self.chain.horizon()
    }

    /// The graph binned into time columns of width `delta * H`.
    pub fn to_planar_set(&self, delta: f64) -> Result<PlanarSet> {
        let mut binner = ColumnBinner::new(self.horizon(), delta)?;
        for e in self.chain.epochs() {
            binner.level(e.start, e.end, e.state as f64);
        }
        for c in &self.columns {
            binner.column(c.t, c.lo, c.hi);
        }
        binner.finish()
    }
}

/// [`limit_graph_with`] with the default band and `m_min`.
pub fn limit_graph(beta: &BrownianPath, lambda: f64, p: f64, horizon: f64) -> Result<LimitGraph> {
    limit_graph_with(beta, lambda, p, horizon, default_band(beta.dt_eff()), DEFAULT_M_MIN)
}

/// Columns shorter than `m_min` are dropped, except at level changes.
pub fn limit_graph_with(beta: &BrownianPath, lambda: f64, p: f64, horizon: f64, eps: f64, m_min: f64) -> Result<LimitGraph> {
    check_m_min(m_min)?;
    let clock = mixed_local_time_clock_with(beta, lambda, p, eps)?;
    limit_graph_from_clock(beta, &clock, horizon, m_min)
}

pub fn limit_graph_from_clock(beta: &BrownianPath, clock: &MixedClock, horizon: f64, m_min: f64) -> Result<LimitGraph> {
    let (initial, jumps) = clock.jumps(horizon)?;
    let chain = JumpChain::new(initial, jumps, horizon)?;
    let v = beta.values();
    let runs = clock.runs();
    let mut columns = Vec::new();
    let mut push = |t: f64, before: Option<u8>, after: u8, gap: &[f64]| {
        let (lo, hi) = gap.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        let col = match before {
            Some(b) if b != after => (0.0, 1.0),
            _ if after == 0 => (0.0, clamp_inverse(hi)),
            _ => (clamp_inverse(lo), 1.0),
        };
        if col.1 - col.0 >= m_min || col == (0.0, 1.0) {
            columns.push(crate::graph_metric::Column { t, lo: col.0, hi: col.1 });
        }
    };
    // the stretch before the first band visit is the spike at time 0
    if runs[0].start > 0 {
        push(0.0, None, runs[0].level, &v[..runs[0].start]);
    }
    for w in runs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.clock_start >= horizon {
            break;
        }
        if b.start > a.end {
            push(b.clock_start, Some(a.level), b.level, &v[a.end..b.start]);
        } else if a.level != b.level {
            push(b.clock_start, Some(a.level), b.level, &[]);
        }
    }
    Ok(LimitGraph { chain, columns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale_time::sample_brownian;

    #[test]
    fn chain_accessors() {
        let c = JumpChain::new(1, vec![0.5, 1.5, 2.0], 3.0).unwrap();
        assert_eq!(c.states().collect::<Vec<_>>(), vec![0, 1, 0]);
        assert_eq!(c.state_at(0.0), 1);
        assert_eq!(c.state_at(0.5), 0);
        assert_eq!(c.state_at(2.5), 0);
        assert_eq!(c.holding_times(), [vec![1.0], vec![0.5, 0.5]]);
        assert_eq!(c.occupation(), [2.0, 1.0]);
        let path = c.to_path(0.5).unwrap();
        assert_eq!(path.values(), &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(JumpChain::new(0, vec![1.0, 1.0], 3.0).is_err());
        assert!(JumpChain::new(0, vec![4.0], 3.0).is_err());
    }

    #[test]
    fn initial_state_follows_x0() {
        for seed in 0..20 {
            assert_eq!(sample_q(1.0, 0.3, 1.0, 1.0, seed).unwrap().initial_state(), 1);
            assert_eq!(sample_q(1.0, 0.3, 0.0, 1.0, seed).unwrap().initial_state(), 0);
        }
    }

    #[test]
    fn holding_means_and_occupation() {
        let (lambda, p) = (1.0, 0.3);
        let chain = sample_q(lambda, p, 0.3, 30_000.0, 5).unwrap();
        let [h0, h1] = chain.holding_times();
        assert!(h0.len() > 5000 && h1.len() > 5000);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&h0) * lambda * p - 1.0).abs() < 0.05);
        assert!((mean(&h1) * lambda * (1.0 - p) - 1.0).abs() < 0.05);
        let occ = chain.occupation();
        assert!((occ[1] / chain.horizon() - p).abs() < 0.02);
    }

    #[test]
    fn first_spike_boundaries_and_symmetry() {
        let mut rng = stream(3, 0);
        assert_eq!(sample_first_spike(0.0, &mut rng).unwrap(), FirstSpike::Point(0.0));
        assert_eq!(sample_first_spike(1.0, &mut rng).unwrap().interval(), (1.0, 1.0));
        let n = 20_000;
        let mut up = 0;
        for _ in 0..n {
            match sample_first_spike(0.5, &mut rng).unwrap() {
                FirstSpike::UpToOne { low } => {
                    up += 1;
                    assert!(low > 0.0 && low < 0.5);
                }
                FirstSpike::DownToZero { high } => assert!(high > 0.5 && high < 1.0),
                FirstSpike::Point(_) => unreachable!(),
            }
        }
        let sd = (0.25 / n as f64).sqrt();
        assert!((up as f64 / n as f64 - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn first_spike_case_probability_integrates() {
        // integral_0^x (1 - x)(1 - y)^-2 dy = x
        for x in [0.1, 0.4, 0.75] {
            let f = |y: f64| (1.0 - x) / (1.0 - y).powi(2);
            let v = crate::quad::adaptive(&f, 0.0, x, 1e-13);
            assert!((v - x).abs() < 1e-10);
            let g = |y: f64| x / (y * y);
            assert!((crate::quad::adaptive(&g, x, 1.0, 1e-13) - (1.0 - x)).abs() < 1e-10);
        }
    }

    #[test]
    fn spikes_respect_orientation_and_truncation() {
        let chain = sample_q(1.0, 0.3, 0.5, 50.0, 2).unwrap();
        let spikes = sample_spikes(1.0, 0.3, &chain, 0.01, 9).unwrap();
        assert!(!spikes.is_empty());
        for e in &spikes.events {
            assert_eq!(chain.state_at(e.t), e.state);
            assert!(e.m >= 0.01 && e.m < 1.0);
            let (lo, hi) = e.interval();
            assert!(if e.state == 0 { lo == 0.0 } else { hi == 1.0 });
        }
        assert!(spikes.events.windows(2).all(|w| w[0].t <= w[1].t));
        let none = sample_spikes(1.0, 0.3, &chain, 1.0 - 1e-12, 9).unwrap();
        assert!(none.len() <= 1);
        assert!(sample_spikes(1.0, 0.3, &chain, 0.0, 9).is_err());
    }

    #[test]
    fn halving_truncation_scales_counts() {
        let chain = sample_q(1.0, 0.3, 0.0, 2000.0, 4).unwrap();
        let m = 0.2;
        let (a, b) = (sample_spikes(1.0, 0.3, &chain, m, 1).unwrap(), sample_spikes(1.0, 0.3, &chain, m / 2.0, 1).unwrap());
        let ratio = b.len() as f64 / a.len() as f64;
        let want = (2.0 / m - 1.0) / (1.0 / m - 1.0);
        assert!((ratio - want).abs() < 0.1 * want, "{ratio} vs {want}");
    }

    #[test]
    fn maxima_tail_endpoints() {
        assert_eq!(maxima_tail(0.01, 0.01), 1.0);
        assert_eq!(maxima_tail(1.0, 0.01), 0.0);
        assert!((maxima_tail(0.5, 0.01) - 1.0 / 99.0).abs() < 1e-15);
    }

    #[test]
    fn limit_graph_of_a_hand_path() {
        // enters band 0, spikes to 0.4, crosses to 1, dips to 0.8
        let v = vec![0.6, 0.3, 0.0, 0.2, 0.4, 0.1, 0.0, 0.5, 1.0, 0.8, 1.0, 1.0];
        let beta = BrownianPath::from_values(1.0, v).unwrap();
        let eps = 0.01;
        let clock = mixed_local_time_clock_with(&beta, 1.0, 0.3, eps).unwrap();
        let g = limit_graph_from_clock(&beta, &clock, clock.total() * 0.999, 1e-3).unwrap();
        assert_eq!(g.chain.initial_state(), 0);
        assert_eq!(g.chain.jump_times().len(), 1);
        let cols: Vec<(f64, f64)> = g.columns.iter().map(|c| (c.lo, c.hi)).collect();
        assert_eq!(cols, vec![(0.0, 0.6), (0.0, 0.4), (0.0, 1.0), (0.8, 1.0)]);
        for c in &g.columns {
            let q = g.chain.state_at(c.t) as f64;
            assert!(c.lo <= q && q <= c.hi);
        }
    }

    #[test]
    fn limit_graph_needs_enough_clock() {
        let beta = sample_brownian(0.3, 1e-4, 1.0, 1).unwrap();
        assert!(matches!(limit_graph(&beta, 1.0, 0.3, 1e6), Err(Error::Horizon { .. })));
    }

    #[test]
    fn limit_graph_columns_contain_the_chain() {
        let beta = sample_brownian(0.3, 1e-5, 20.0, 6).unwrap();
        let clock = crate::scale_time::mixed_local_time_clock(&beta, 1.0, 0.3).unwrap();
        let h = 0.9 * clock.total();
        let g = limit_graph_from_clock(&beta, &clock, h, 1e-3).unwrap();
        for c in &g.columns {
            let (a, b) = (g.chain.state_at(c.t) as f64, g.chain.state_at(c.t - 1e-12) as f64);
            assert!(c.lo <= a && a <= c.hi && c.lo <= b && b <= c.hi);
        }
        let set = g.to_planar_set(1e-3).unwrap();
        assert!(!set.is_empty());
    }
}
