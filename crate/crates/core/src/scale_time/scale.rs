//! Scale function of the scalar model and the density `phi` of the real-time
//! clock in effective time.
//!
//! Everything is evaluated in the logit coordinate `z = ln(x / (1 - x))`,
//! which resolves the boundary layers of width `O(1/gamma)` near 0 and 1. In
//! that coordinate `H(z) = h(x(z))` has derivative `exp(g(z))` with
//!
//! ```text
//! g(z) = inner_exponent(x) + ln(x (1 - x)),
//! ```
//!
//! and `phi(H(z)) = exp(-2 g(z)) / gamma`.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::twostate::TwoStateParams;

/// Grid step of the tabulated scale function, in logit units.
pub const TABLE_STEP: f64 = 1e-3;
/// The table extends until `|h - q0|` exceeds this.
pub const TABLE_REACH: f64 = 1e4;
/// Upper cap on `phi`.
pub const PHI_CAP: f64 = 1e12;
const Z_LIMIT: f64 = 700.0;

/// Closed-form antiderivative of `(u - p) / (u^2 (1 - u)^2)`.
fn antiderivative(u: f64, p: f64) -> f64 {
    (1.0 - 2.0 * p) * (u / (1.0 - u)).ln() + p / u + (1.0 - p) / (1.0 - u)
}

/// `integral_p^y 2 lambda (u - p) / (gamma u^2 (1 - u)^2) du`, for `y` in (0, 1).
pub fn inner_exponent(y: f64, params: &TwoStateParams) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidParameter {
            name: "y",
            value: y,
            expected: "a value in (0, 1)",
        });
    }
    let p = params.p();
    let coef = 2.0 * params.lambda() / params.gamma();
    // nonnegative analytically; the max removes cancellation noise near y = p
    Ok((coef * (antiderivative(y, p) - antiderivative(p, p))).max(0.0))
}

/// The limit of `h^{-1}` as gamma grows: clamping to `[0, 1]`.
#[inline]
pub fn clamp_inverse(y: f64) -> f64 {
    y.clamp(0.0, 1.0)
}

#[inline]
fn logit(x: f64) -> f64 {
    x.ln() - (-x).ln_1p()
}

/// `(x, 1 - x)` for `x = 1 / (1 + exp(-z))`, both to full relative precision.
#[inline]
pub(crate) fn sigmoid_pair(z: f64) -> (f64, f64) {
    let e = (-z.abs()).exp();
    let big = 1.0 / (1.0 + e);
    let small = e / (1.0 + e);
    if z >= 0.0 {
        (big, small)
    } else {
        (small, big)
    }
}

/// Harmonic scale function `h` anchored so that `h(q0) = q0`, with the
/// derived quantities needed for the time change.
#[derive(Debug, Clone)]
pub struct ScaleFunction {
    params: TwoStateParams,
    anchor: f64,
    coef: f64,
    f_at_p: f64,
    z_anchor: f64,
    k_anchor: usize,
    dz: f64,
    h: Vec<f64>,
    dh: Vec<f64>,
}

impl ScaleFunction {
    pub fn new(params: TwoStateParams, anchor: f64) -> Result<Self> {
        if !(anchor > 0.0 && anchor < 1.0) {
            return Err(Error::InvalidParameter {
                name: "q0",
                value: anchor,
                expected: "an anchor in (0, 1)",
            });
        }
        let p = params.p();
        let coef = 2.0 * params.lambda() / params.gamma();
        let mut s = Self {
            params,
            anchor,
            coef,
            f_at_p: 0.0,
            z_anchor: logit(anchor),
            k_anchor: 0,
            dz: TABLE_STEP,
            h: Vec::new(),
            dh: Vec::new(),
        };
        s.f_at_p = s.antiderivative_z(logit(p));
        s.build_table();
        Ok(s)
    }

    fn build_table(&mut self) {
        let z0 = self.z_anchor;
        let dz = self.dz;
        let walk = |dir: f64| -> (Vec<f64>, Vec<f64>) {
            let mut hs = vec![self.anchor];
            let mut ds = vec![self.log_dh(z0).exp()];
            let mut j = 0.0;
            loop {
                let (za, zb) = (z0 + dir * j * dz, z0 + dir * (j + 1.0) * dz);
                if zb.abs() > Z_LIMIT {
                    break;
                }
                let d = self.log_dh(zb).exp();
                let inc = gauss_legendre(&|z| self.log_dh(z).exp(), za.min(zb), za.max(zb));
                let next = hs[hs.len() - 1] + dir * inc;
                if !(next.is_finite() && d.is_finite()) {
                    break;
                }
                hs.push(next);
                ds.push(d);
                j += 1.0;
                if (next - self.anchor).abs() > TABLE_REACH {
                    break;
                }
            }
            (hs, ds)
        };
        let (up_h, up_d) = walk(1.0);
        let (down_h, down_d) = walk(-1.0);
        self.k_anchor = down_h.len() - 1;
        self.h = down_h.into_iter().skip(1).rev().chain(up_h).collect();
        self.dh = down_d.into_iter().skip(1).rev().chain(up_d).collect();
    }

    #[inline]
    fn antiderivative_z(&self, z: f64) -> f64 {
        let p = self.params.p();
        (1.0 - 2.0 * p) * z + 1.0 + p * (-z).exp() + (1.0 - p) * z.exp()
    }

    /// `g(z) = ln H'(z)`.
    #[inline]
    pub(crate) fn log_dh(&self, z: f64) -> f64 {
        let a = z.abs();
        self.coef * (self.antiderivative_z(z) - self.f_at_p) - a - 2.0 * (-a).exp().ln_1p()
    }

    #[inline]
    fn node(&self, k: usize) -> f64 {
        self.z_anchor + (k as f64 - self.k_anchor as f64) * self.dz
    }

    pub fn params(&self) -> &TwoStateParams {
        &self.params
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Range of `h` covered by the table.
    pub fn table_range(&self) -> (f64, f64) {
        (self.h[0], self.h[self.h.len() - 1])
    }

    pub fn table_len(&self) -> usize {
        self.h.len()
    }

    /// `h'(x) = exp(inner_exponent(x))`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        inner_exponent(x, &self.params).map(f64::exp)
    }

    /// `H(z)` for `z` inside table cell `k`.
    fn h_in_cell(&self, k: usize, z: f64) -> f64 {
        let zk = self.node(k);
        if z == zk {
            return self.h[k];
        }
        self.h[k] + gauss_legendre(&|s| self.log_dh(s).exp(), zk, z)
    }

    /// `h(x) = q0 + integral_{q0}^x h'(y) dy`; infinite once the integral overflows.
    pub fn scale(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::InvalidParameter {
                name: "x",
                value: x,
                expected: "a value in (0, 1)",
            });
        }
        let z = logit(x);
        let n = self.h.len();
        let (z_lo, z_hi) = (self.node(0), self.node(n - 1));
        if z >= z_lo && z <= z_hi {
            let k = (((z - z_lo) / self.dz).floor() as usize).min(n - 2);
            return Ok(self.h_in_cell(k, z));
        }
        // beyond the table: integrate outward cell by cell
        let (mut za, mut acc, dir) = if z < z_lo { (z_lo, self.h[0], -1.0) } else { (z_hi, self.h[n - 1], 1.0) };
        loop {
            let zb = if (z - za).abs() <= self.dz { z } else { za + dir * self.dz };
            acc += dir * gauss_legendre(&|s| self.log_dh(s).exp(), za.min(zb), za.max(zb));
            if zb == z || !acc.is_finite() {
                return Ok(acc);
            }
            za = zb;
        }
    }

    /// Cubic Hermite interpolant of `H` on cell `k` at fraction `s`, and its
    /// derivative in `s`.
    #[inline]
    fn hermite(&self, k: usize, s: f64) -> (f64, f64) {
        let (h0, h1) = (self.h[k], self.h[k + 1]);
        let (m0, m1) = (self.dh[k] * self.dz, self.dh[k + 1] * self.dz);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * h0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * h1 + (s3 - s2) * m1;
        let slope = (6.0 * s2 - 6.0 * s) * h0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * h1 + (3.0 * s2 - 2.0 * s) * m1;
        (value, slope)
    }

    /// Solve the Hermite interpolant of cell `k` for `y`; returns `z`.
    #[inline]
    fn hermite_inverse(&self, k: usize, y: f64) -> f64 {
        let (h0, h1) = (self.h[k], self.h[k + 1]);
        let span = h1 - h0;
        let mut s = if span > 0.0 { ((y - h0) / span).clamp(0.0, 1.0) } else { 0.5 };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..40 {
            let (v, d) = self.hermite(k, s);
            let f = v - y;
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let mut next = if d > 0.0 { s - f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            // 1e-13 of a cell is about 1e-16 in z
            let done = (next - s).abs() < 1e-13 || hi - lo < 1e-13;
            s = next;
            if done {
                break;
            }
        }
        self.node(k) + s * self.dz
    }

    /// Cell containing `y`, searched from `hint` by galloping.
    #[inline]
    fn locate(&self, y: f64, hint: usize) -> usize {
        let last = self.h.len() - 2;
        let mut k = hint.min(last);
        if y >= self.h[k] {
            if y < self.h[k + 1] {
                return k;
            }
            let mut step = 1;
            let mut lo = k;
            loop {
                let probe = (k + step).min(last);
                if probe == last || y < self.h[probe + 1] {
                    let hi = probe;
                    return lo + self.h[lo + 1..=hi + 1].partition_point(|&v| v <= y).min(hi - lo);
                }
                lo = probe;
                k = probe;
                step *= 2;
            }
        } else {
            let mut step = 1;
            let mut hi = k;
            loop {
                let probe = k.saturating_sub(step);
                if probe == 0 || y >= self.h[probe] {
                    return probe + self.h[probe + 1..=hi].partition_point(|&v| v <= y);
                }
                hi = probe;
                k = probe;
                step *= 2;
            }
        }
    }

    /// Exact inverse in logit coordinates: safeguarded Newton on the
    /// quadrature-evaluated `H`, to a bracket of `1e-12`.
    fn inverse_z(&self, y: f64) -> Result<f64> {
        let n = self.h.len();
        if y >= self.h[0] && y <= self.h[n - 1] {
            let k = self.locate(y, self.k_anchor);
            let guess = self.hermite_inverse(k, y);
            return self.polish(y, self.node(k), self.node(k + 1), self.h[k], guess);
        }
        // walk outward cell by cell until the bracket is found
        let (dir, mut za, mut ha) = if y < self.h[0] { (-1.0, self.node(0), self.h[0]) } else { (1.0, self.node(n - 1), self.h[n - 1]) };
        loop {
            let zb = za + dir * self.dz;
            if zb.abs() > Z_LIMIT {
                return Ok(za);
            }
            let inc = gauss_legendre(&|s| self.log_dh(s).exp(), za.min(zb), za.max(zb));
            let hb = ha + dir * inc;
            let crossed = if dir < 0.0 { hb <= y } else { hb >= y };
            if crossed || !hb.is_finite() {
                let (lo, hi, h_lo) = if dir < 0.0 { (zb, za, hb) } else { (za, zb, ha) };
                if !h_lo.is_finite() {
                    // bisection only: the lower end overflowed
                    return self.bisect_from(y, lo, hi, za, ha);
                }
                return self.polish(y, lo, hi, h_lo, 0.5 * (lo + hi));
            }
            za = zb;
            ha = hb;
        }
    }

    fn polish(&self, y: f64, mut lo: f64, mut hi: f64, h_lo: f64, guess: f64) -> Result<f64> {
        let z_base = lo;
        let h_at = |z: f64| h_lo + gauss_legendre(&|s| self.log_dh(s).exp(), z_base, z);
        let mut z = guess.clamp(lo, hi);
        for _ in 0..200 {
            let f = h_at(z) - y;
            if f == 0.0 {
                return Ok(z);
            }
            if f < 0.0 {
                lo = z;
            } else {
                hi = z;
            }
            let d = self.log_dh(z).exp();
            let mut next = z - f / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if hi - lo < 1e-12 || (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
                return Ok(next);
            }
            z = next;
        }
        Err(Error::RootFinding { lo, hi })
    }

    fn bisect_from(&self, y: f64, mut lo: f64, mut hi: f64, z_ref: f64, h_ref: f64) -> Result<f64> {
        // `H` is known at `z_ref` (the finite end); integrate from there
        let h_at = |z: f64| h_ref - gauss_legendre(&|s| self.log_dh(s).exp(), z, z_ref);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = h_at(mid);
            if v < y || !v.is_finite() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::RootFinding { lo, hi })
    }

    /// `h^{-1}(y)`, mapping the real line into (0, 1).
    pub fn scale_inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::InvalidParameter {
                name: "y",
                value: y,
                expected: "a finite value",
            });
        }
        self.inverse_z(y).map(|z| sigmoid_pair(z).0)
    }

    fn phi_from_z(&self, z: f64) -> (f64, bool) {
        let v = (-2.0 * self.log_dh(z)).exp() / self.params.gamma();
        if v > PHI_CAP || v.is_nan() {
            (PHI_CAP, true)
        } else {
            (v, false)
        }
    }

    /// `phi(y) = 1 / (gamma (x (1 - x) h'(x))^2)` at `x = h^{-1}(y)`, capped at [`PHI_CAP`].
    pub fn phi(&self, y: f64) -> Result<f64> {
        self.inverse_z(y).map(|z| self.phi_from_z(z).0)
    }

    /// `integral f(y) phi(y) dy` by Gauss–Legendre on every table cell.
    ///
    /// The part of the line outside the table carries `phi`-mass of order
    /// `1 / (gamma * TABLE_REACH)` and is dropped.
    pub fn pair_with<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let gamma = self.params.gamma();
        let mut total = 0.0;
        for k in 0..self.h.len() - 1 {
            let (za, zb) = (self.node(k), self.node(k + 1));
            let integrand = |z: f64| {
                let (y, _) = self.hermite(k, (z - za) / self.dz);
                f(y) * (-self.log_dh(z)).exp() / gamma
            };
            total += gauss_legendre(&integrand, za, zb);
        }
        total
    }

    /// A cursor for fast repeated inversion along a continuous path.
    pub fn cursor(&self) -> InverseCursor<'_> {
        InverseCursor {
            scale: self,
            hint: self.k_anchor,
            capped: 0,
        }
    }
}

/// State of the clock at one effective-time sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePoint {
    /// `h^{-1}(y)`.
    pub x: f64,
    /// `phi(y)`.
    pub phi: f64,
}

/// Repeated `h^{-1}` and `phi` evaluation for nearby arguments. Inside the
/// table this uses the Hermite interpolant (relative error below 1e-9).
#[derive(Debug, Clone)]
pub struct InverseCursor<'a> {
    scale: &'a ScaleFunction,
    hint: usize,
    capped: u64,
}

impl InverseCursor<'_> {
    #[inline]
    pub fn eval(&mut self, y: f64) -> Result<ScalePoint> {
        let s = self.scale;
        let n = s.h.len();
        let z = if y >= s.h[0] && y < s.h[n - 1] {
            let k = s.locate(y, self.hint);
            self.hint = k;
            s.hermite_inverse(k, y)
        } else {
            s.inverse_z(y)?
        };
        let (phi, capped) = s.phi_from_z(z);
        self.capped += capped as u64;
        Ok(ScalePoint {
            x: sigmoid_pair(z).0,
            phi,
        })
    }

    /// Number of `phi` evaluations that hit the cap.
    pub fn capped(&self) -> u64 {
        self.capped
    }
}
