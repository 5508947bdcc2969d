use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default tolerance on the smallest eigenvalue of a density matrix.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;
/// Tolerance on `|Tr rho - 1|`.
pub const TRACE_TOL: f64 = 1e-12;
/// Tolerance used when accepting externally supplied Hermitian matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Build an `n x n` complex matrix from row-major `(re, im)` pairs.
pub fn cmatrix_from_pairs(n: usize, pairs: &[f64]) -> Result<CMatrix> {
    if pairs.len() != 2 * n * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n * n,
            found: pairs.len(),
        });
    }
    Ok(CMatrix::from_row_iterator(
        n,
        n,
        pairs.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])),
    ))
}

/// Complex vector from `(re, im)` pairs.
pub fn cvector_from_pairs(pairs: &[f64]) -> Result<Vec<Complex64>> {
    if pairs.len() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: pairs.len() + 1,
            found: pairs.len(),
        });
    }
    Ok(pairs.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

/// Largest entrywise modulus of `A - A^dagger`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A^dagger) / 2`, Hermitian bit-for-bit.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        out[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let upper = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[(i, j)] = upper;
            out[(j, i)] = upper.conj();
        }
    }
    out
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)].re;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// A point of the state space: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT_PSD_TOL)
    }

    pub fn with_tolerance(m: CMatrix, psd_tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidModel("zero-dimensional density matrix".into()));
        }
        let defect = hermiticity_defect(&m);
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::InvalidModel(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let m = hermitize(&m);
        let tr = m.trace().re;
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::InvalidParameter {
                name: "trace",
                value: tr,
                expected: "unit trace",
            });
        }
        let lowest = min_eigenvalue(&m);
        if !(lowest >= -psd_tol) {
            return Err(Error::NotPositive {
                step: None,
                eigenvalue: lowest,
            });
        }
        Ok(Self { m })
    }

    /// Wrap a matrix already known to be Hermitian with unit trace.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self { m }
    }

    /// The pointer state `|n_i><n_i|` (pointer basis = computational basis).
    pub fn pointer_state(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: i,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        Ok(Self { m })
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(q: &[f64]) -> Result<Self> {
        let n = q.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(q[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    /// Diagonal entries in the pointer basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.m)
    }

    /// `(q - 1/2)^2 + |p|^2 - 1/4` for a two-level state; positive means the
    /// state lies outside the Bloch ball.
    pub fn bloch_excess(&self) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        let q = self.m[(0, 0)].re;
        let p = self.m[(1, 0)];
        Ok((q - 0.5).powi(2) + p.norm_sqr() - 0.25)
    }

    /// Whether every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)] == Complex64::new(0.0, 0.0)))
    }
}

/// Populations of an `n`-level system: nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector {
    q: Vec<f64>,
}

impl PopulationVector {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&bad) = q.iter().find(|x| !(**x >= -Self::SUM_TOL)) {
            return Err(Error::InvalidParameter {
                name: "population",
                value: bad,
                expected: "nonnegative populations",
            });
        }
        let sum: f64 = q.iter().sum();
        if !((sum - 1.0).abs() <= Self::SUM_TOL) {
            return Err(Error::InvalidParameter {
                name: "population sum",
                value: sum,
                expected: "populations summing to one",
            });
        }
        Ok(Self { q })
    }

    pub(crate) fn from_trusted(q: Vec<f64>) -> Self {
        Self { q }
    }

    pub fn vertex(dim: usize, i: usize) -> Self {
        let mut q = vec![0.0; dim];
        q[i] = 1.0;
        Self { q }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn sum(&self) -> f64 {
        self.q.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn accepts_valid_states() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0)]);
        let rho = DensityMatrix::new(m).unwrap();
        assert_eq!(rho.hermiticity_defect(), 0.0);
        assert!(rho.bloch_excess().unwrap() < 0.0);
    }

    #[test]
    fn rejects_non_hermitian_or_unnormalized_or_negative() {
        let asym = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(asym).is_err());
        let heavy = CMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0)]);
        assert!(DensityMatrix::new(heavy).is_err());
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.1, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn hermitize_is_exact() {
        let a = CMatrix::from_fn(3, 3, |i, j| c(0.1 * i as f64 + 0.37 * j as f64, 0.3 * (i as f64 - 2.0 * j as f64)));
        let h = hermitize(&a);
        assert_eq!(hermiticity_defect(&h), 0.0);
    }

    #[test]
    fn populations_must_sum_to_one() {
        assert!(PopulationVector::new(vec![0.5, 0.5]).is_ok());
        assert!(PopulationVector::new(vec![0.5, 0.6]).is_err());
        assert!(PopulationVector::new(vec![1.1, -0.1]).is_err());
    }

    #[test]
    fn pairs_are_row_major() {
        let m = cmatrix_from_pairs(2, &[1.0, 0.0, 2.0, 0.5, 3.0, 0.0, 4.0, -1.0]).unwrap();
        assert_eq!(m[(0, 1)], c(2.0, 0.5));
        assert_eq!(m[(1, 0)], c(3.0, 0.0));
        assert!(cmatrix_from_pairs(2, &[1.0]).is_err());
    }
}
