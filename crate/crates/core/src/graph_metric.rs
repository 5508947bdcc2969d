//! Hausdorff distance between discretized closed subsets of `[0, H] x [0, 1]`.
//!
//! Sets are stored as vertical columns `(t, y_low, y_high)`; a point is a
//! column of zero height. Before any distance is taken, time is divided by
//! the horizon `H` so both axes live in the unit box, and each column is
//! expanded into equally spaced points no further apart than the set's
//! resolution. Distances are Euclidean and exact for those point sets.

use crate::error::{check_positive, Error, Result};
use crate::path::Path;

/// A vertical segment `{t} x [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Column {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Column {
    pub fn point(t: f64, y: f64) -> Self {
        Self { t, lo: y, hi: y }
    }

    /// Number of gaps between expanded points at resolution `delta`.
    #[inline]
    fn divisions(&self, delta: f64) -> usize {
        ((self.hi - self.lo) / delta).ceil() as usize
    }
}

/// A finite closed subset of `[0, H] x [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSet {
    horizon: f64,
    resolution: f64,
    /// Sorted by normalized time.
    columns: Vec<Column>,
}

impl PlanarSet {
    pub fn from_points<I: IntoIterator<Item = (f64, f64)>>(horizon: f64, resolution: f64, points: I) -> Result<Self> {
        Self::from_columns(horizon, resolution, points.into_iter().map(|(t, y)| Column::point(t, y)).collect())
    }

    /// Build from columns in original time units. Points may sit outside the
    /// box by at most `resolution` (in normalized units).
    pub fn from_columns(horizon: f64, resolution: f64, mut columns: Vec<Column>) -> Result<Self> {
        check_positive("H", horizon)?;
        check_positive("delta", resolution)?;
        let slack = resolution;
        for c in &columns {
            let tn = c.t / horizon;
            let ok = c.lo <= c.hi && tn >= -slack && tn <= 1.0 + slack && c.lo >= -slack && c.hi <= 1.0 + slack;
            if !ok {
                return Err(Error::InvalidParameter {
                    name: "column",
                    value: if c.lo <= c.hi { c.t } else { c.lo },
                    expected: "columns with lo <= hi inside [0, H] x [0, 1]",
                });
            }
        }
        columns.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.lo.total_cmp(&b.lo)));
        Ok(Self {
            horizon,
            resolution,
            columns,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// The expanded point set, in original units.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for c in &self.columns {
            let m = c.divisions(self.resolution);
            for i in 0..=m {
                out.push((c.t, expanded(c, m, i)));
            }
        }
        out
    }
}

#[inline]
fn expanded(c: &Column, m: usize, i: usize) -> f64 {
    if m == 0 {
        c.lo
    } else if i == m {
        c.hi
    } else {
        c.lo + (c.hi - c.lo) * (i as f64 / m as f64)
    }
}

/// Normalized column with its expansion count.
#[derive(Clone, Copy)]
struct Target {
    t: f64,
    lo: f64,
    hi: f64,
    m: usize,
}

impl Target {
    /// Vertical gap to the nearest expanded point.
    #[inline]
    fn gap(&self, y: f64) -> f64 {
        if self.m == 0 || y <= self.lo || y >= self.hi {
            return if y <= self.lo { self.lo - y } else { y - self.hi }.max(0.0);
        }
        let step = (self.hi - self.lo) / self.m as f64;
        let i = ((y - self.lo) / step).round() as usize;
        let lo_i = i.saturating_sub(1);
        let hi_i = (i + 1).min(self.m);
        let col = Column {
            t: self.t,
            lo: self.lo,
            hi: self.hi,
        };
        (lo_i..=hi_i).map(|j| (expanded(&col, self.m, j) - y).abs()).fold(f64::INFINITY, f64::min)
    }
}

fn targets(set: &PlanarSet) -> Vec<Target> {
    set.columns
        .iter()
        .map(|c| Target {
            t: c.t / set.horizon,
            lo: c.lo,
            hi: c.hi,
            m: c.divisions(set.resolution),
        })
        .collect()
}

fn check_pair(a: &PlanarSet, b: &PlanarSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    if (a.horizon - b.horizon).abs() > 1e-12 * a.horizon.max(b.horizon) {
        return Err(Error::InvalidParameter {
            name: "H",
            value: b.horizon,
            expected: "both sets normalized by the same horizon",
        });
    }
    Ok(())
}

/// `sup_{a in A} inf_{b in B} |a - b|` over the expanded point sets.
pub fn directed_hausdorff(a: &PlanarSet, b: &PlanarSet) -> Result<f64> {
    check_pair(a, b)?;
    let tb = targets(b);
    let mut worst: f64 = 0.0;
    let mut hint = 0;
    for src in targets(a) {
        // start the scan at the first target column at or after src.t
        hint = if hint < tb.len() && tb[hint].t <= src.t { hint + tb[hint..].partition_point(|c| c.t < src.t) } else { tb.partition_point(|c| c.t < src.t) };
        for i in 0..=src.m {
            let y = expanded(&Column { t: src.t, lo: src.lo, hi: src.hi }, src.m, i);
            let best = nearest(&tb, hint, src.t, y, worst);
            worst = worst.max(best);
        }
    }
    Ok(worst)
}

/// Distance from `(t, y)` to the target set, abandoning the search once it
/// is known to be at most `floor`.
#[inline]
fn nearest(tb: &[Target], start: usize, t: f64, y: f64, floor: f64) -> f64 {
    let mut best_sq = f64::INFINITY;
    let floor_sq = floor * floor;
    let mut right = start;
    let mut left = start;
    loop {
        let mut progressed = false;
        if right < tb.len() {
            let dt = tb[right].t - t;
            if dt * dt < best_sq {
                let g = tb[right].gap(y);
                best_sq = best_sq.min(dt * dt + g * g);
                right += 1;
                progressed = true;
            } else {
                right = tb.len();
            }
        }
        if left > 0 {
            let dt = t - tb[left - 1].t;
            if dt * dt < best_sq {
                let g = tb[left - 1].gap(y);
                best_sq = best_sq.min(dt * dt + g * g);
                left -= 1;
                progressed = true;
            } else {
                left = 0;
            }
        }
        if !progressed || best_sq <= floor_sq {
            break;
        }
    }
    best_sq.sqrt()
}

/// Hausdorff distance in the normalized box.
pub fn hausdorff(a: &PlanarSet, b: &PlanarSet) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// The graph of a path, linearly interpolated and resampled along arc length
/// (in normalized units) at spacing at most `delta`.
pub fn graph_of(path: &Path, horizon: f64, delta: f64) -> Result<PlanarSet> {
    check_positive("H", horizon)?;
    check_positive("delta", delta)?;
    let mut pts = Vec::with_capacity(path.len());
    let mut prev: Option<(f64, f64)> = None;
    for (t, y) in path.iter() {
        if let Some((t0, y0)) = prev {
            let len = ((t - t0) / horizon).hypot(y - y0);
            let k = (len / delta).ceil().max(1.0) as usize;
            for j in 1..k {
                let s = j as f64 / k as f64;
                pts.push((t0 + s * (t - t0), y0 + s * (y - y0)));
            }
        }
        pts.push((t, y));
        prev = Some((t, y));
    }
    PlanarSet::from_points(horizon, delta, pts)
}

/// Streams points and segments into time bins of width `delta * H`, keeping
/// the vertical extent seen in each bin. The result has one column per
/// visited bin, placed at the bin center, and lies within `delta / 2` of the
/// streamed set in Hausdorff distance whenever each bin's content is connected.
#[derive(Debug, Clone)]
pub struct ColumnBinner {
    horizon: f64,
    delta: f64,
    width: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    last: Option<(f64, f64)>,
    closed: bool,
}

impl ColumnBinner {
    pub fn new(horizon: f64, delta: f64) -> Result<Self> {
        check_positive("H", horizon)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                expected: "a resolution in (0, 1)",
            });
        }
        let n = (1.0 / delta).ceil() as usize;
        Ok(Self {
            horizon,
            delta,
            width: horizon / n as f64,
            lo: vec![f64::INFINITY; n],
            hi: vec![f64::NEG_INFINITY; n],
            last: None,
            closed: false,
        })
    }

    #[inline]
    fn bin(&self, t: f64) -> usize {
        ((t / self.width) as usize).min(self.lo.len() - 1)
    }

    #[inline]
    fn mark(&mut self, b: usize, y: f64) {
        self.lo[b] = self.lo[b].min(y);
        self.hi[b] = self.hi[b].max(y);
    }

    /// Add the column `{t} x [lo, hi]`, independent of the polyline.
    pub fn column(&mut self, t: f64, lo: f64, hi: f64) {
        if !(0.0..=self.horizon).contains(&t) {
            return;
        }
        let b = self.bin(t);
        self.mark(b, lo);
        self.mark(b, hi);
    }

    /// Add a horizontal segment at height `y` over `[t0, t1]`.
    pub fn level(&mut self, t0: f64, t1: f64, y: f64) {
        let (t0, t1) = (t0.max(0.0), t1.min(self.horizon));
        if t0 > t1 {
            return;
        }
        for b in self.bin(t0)..=self.bin(t1) {
            self.mark(b, y);
        }
    }

    /// Continue the polyline to `(t, y)`; times must be nondecreasing.
    /// Points past the horizon are cut at `H`.
    #[inline]
    pub fn push(&mut self, t: f64, y: f64) {
        if self.closed {
            return;
        }
        let Some((t0, y0)) = self.last else {
            if t <= self.horizon {
                let b = self.bin(t.max(0.0));
                self.mark(b, y);
                self.last = Some((t, y));
            }
            return;
        };
        let (t1, y1) = if t > self.horizon {
            self.closed = true;
            let s = if t > t0 { (self.horizon - t0) / (t - t0) } else { 0.0 };
            (self.horizon, y0 + s * (y - y0))
        } else {
            (t, y)
        };
        let (b0, b1) = (self.bin(t0), self.bin(t1));
        if b0 == b1 {
            self.mark(b1, y1);
        } else {
            // the segment's extent inside each bin it crosses
            let slope = (y1 - y0) / (t1 - t0);
            let mut ya = y0;
            for b in b0..b1 {
                let yb = y0 + slope * ((b + 1) as f64 * self.width - t0);
                self.mark(b, ya);
                self.mark(b, yb);
                ya = yb;
            }
            self.mark(b1, ya);
            self.mark(b1, y1);
        }
        self.last = Some((t1, y1));
    }

    /// Forget the polyline so the next `push` starts a new piece.
    pub fn lift(&mut self) {
        self.last = None;
        self.closed = false;
    }

    pub fn finish(self) -> Result<PlanarSet> {
        let columns: Vec<Column> = (0..self.lo.len())
            .filter(|&b| self.lo[b] <= self.hi[b])
            .map(|b| Column {
                t: (b as f64 + 0.5) * self.width,
                lo: self.lo[b],
                hi: self.hi[b],
            })
            .collect();
        if columns.is_empty() {
            return Err(Error::EmptySet);
        }
        PlanarSet::from_columns(self.horizon, self.delta, columns)
    }
}
