use num_complex::Complex64;

use super::density::{hermitize, hermiticity_defect, min_eigenvalue, CMatrix, DensityMatrix, DEFAULT_PSD_TOL, HERMITIAN_TOL};
use crate::error::{check_nonnegative, Error, Result};

fn same_dim(o: &CMatrix, rho: &CMatrix) -> Result<()> {
    if !o.is_square() || o.nrows() != rho.nrows() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: o.nrows(),
        });
    }
    Ok(())
}

/// Lindbladian `L[O](rho) = O rho O^dagger - (rho O^dagger O + O^dagger O rho) / 2`.
pub fn lindblad_dissipator(o: &CMatrix, rho: &DensityMatrix) -> Result<CMatrix> {
    same_dim(o, rho.matrix())?;
    Ok(dissipator(o, rho.matrix()))
}

/// Innovation `D[O](rho) = O rho + rho O^dagger - Tr[(O + O^dagger) rho] rho`.
pub fn innovation(o: &CMatrix, rho: &DensityMatrix) -> Result<CMatrix> {
    same_dim(o, rho.matrix())?;
    Ok(innovation_raw(o, rho.matrix()))
}

pub(crate) fn dissipator(o: &CMatrix, rho: &CMatrix) -> CMatrix {
    let od = o.adjoint();
    let odo = &od * o;
    o * rho * &od - (rho * &odo + &odo * rho) * Complex64::new(0.5, 0.0)
}

pub(crate) fn innovation_raw(o: &CMatrix, rho: &CMatrix) -> CMatrix {
    let od = o.adjoint();
    let expectation = ((o + &od) * rho).trace();
    o * rho + rho * &od - rho * expectation
}

/// A Belavkin equation driven by one Wiener process:
///
/// ```text
/// d rho = -i[H, rho] dt + sum_kl L[M_kl](rho) dt + gamma L[N](rho) dt + sqrt(gamma) D[N](rho) dW
/// ```
#[derive(Debug, Clone)]
pub struct BelavkinModel {
    hamiltonian: CMatrix,
    measurement: CMatrix,
    couplings: Vec<CMatrix>,
    gamma: f64,
    psd_tol: f64,
}

impl BelavkinModel {
    pub fn new(hamiltonian: CMatrix, measurement: CMatrix, couplings: Vec<CMatrix>, gamma: f64) -> Result<Self> {
        let n = hamiltonian.nrows();
        if !hamiltonian.is_square() || n == 0 {
            return Err(Error::InvalidModel("Hamiltonian must be a nonempty square matrix".into()));
        }
        same_dim(&measurement, &hamiltonian)?;
        for m in &couplings {
            same_dim(m, &hamiltonian)?;
        }
        let defect = hermiticity_defect(&hamiltonian);
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::InvalidModel(format!("Hamiltonian is not Hermitian (defect {defect:e})")));
        }
        check_nonnegative("gamma", gamma)?;
        Ok(Self {
            hamiltonian: hermitize(&hamiltonian),
            measurement,
            couplings,
            gamma,
            psd_tol: DEFAULT_PSD_TOL,
        })
    }

    pub fn with_psd_tolerance(mut self, psd_tol: f64) -> Self {
        self.psd_tol = psd_tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn measurement(&self) -> &CMatrix {
        &self.measurement
    }

    pub fn couplings(&self) -> &[CMatrix] {
        &self.couplings
    }

    /// `|| N N^dagger - N^dagger N ||_max`.
    pub fn normality_defect(&self) -> f64 {
        let n = &self.measurement;
        let nd = n.adjoint();
        (n * &nd - &nd * n).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The non-demolition pipeline requires a normal measurement operator.
    pub fn require_normal(&self) -> Result<()> {
        let defect = self.normality_defect();
        if defect <= 1e-12 {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "measurement operator is not normal (defect {defect:e})"
            )))
        }
    }

    /// Deterministic part of the equation evaluated at `rho`.
    pub(crate) fn drift(&self, rho: &CMatrix) -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        let commutator = &self.hamiltonian * rho - rho * &self.hamiltonian;
        let mut out = commutator * (-i);
        for m in &self.couplings {
            out += dissipator(m, rho);
        }
        out += dissipator(&self.measurement, rho) * Complex64::new(self.gamma, 0.0);
        out
    }

    pub(crate) fn diffusion(&self, rho: &CMatrix) -> CMatrix {
        innovation_raw(&self.measurement, rho) * Complex64::new(self.gamma.sqrt(), 0.0)
    }
}

/// Result of one integration step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: DensityMatrix,
    /// Trace of the raw Euler–Maruyama update, before re-Hermitization and
    /// renormalization. Analytically equal to one.
    pub raw_trace: Complex64,
    pub min_eigenvalue: f64,
}

/// Re-Hermitize, renormalize the trace, and check positivity.
pub(crate) fn project(raw: CMatrix, psd_tol: f64) -> Result<StepReport> {
    let raw_trace = raw.trace();
    let mut m = hermitize(&raw);
    let tr = m.trace().re;
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::NotPositive {
            step: None,
            eigenvalue: f64::NAN,
        });
    }
    m /= Complex64::new(tr, 0.0);
    let lowest = min_eigenvalue(&m);
    if !(lowest >= -psd_tol) {
        return Err(Error::NotPositive {
            step: None,
            eigenvalue: lowest,
        });
    }
    Ok(StepReport {
        state: DensityMatrix::from_trusted(m),
        raw_trace,
        min_eigenvalue: lowest,
    })
}

fn check_step(dim: usize, rho: &DensityMatrix, dt: f64) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho.dim(),
        });
    }
    check_nonnegative("dt", dt)
}

/// One Euler–Maruyama step of the full matrix equation with the caller's
/// Brownian increment `dw`.
pub fn em_step_matrix(model: &BelavkinModel, rho: &DensityMatrix, dt: f64, dw: f64) -> Result<DensityMatrix> {
    em_step_matrix_report(model, rho, dt, dw).map(|r| r.state)
}

pub fn em_step_matrix_report(model: &BelavkinModel, rho: &DensityMatrix, dt: f64, dw: f64) -> Result<StepReport> {
    check_step(model.dim(), rho, dt)?;
    let r = rho.matrix();
    let raw = r + model.drift(r) * Complex64::new(dt, 0.0) + model.diffusion(r) * Complex64::new(dw, 0.0);
    project(raw, model.psd_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_z_half() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)])
    }

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = stream(seed, 0);
        CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_state(n: usize, seed: u64) -> DensityMatrix {
        let a = random_matrix(n, seed);
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::new(hermitize(&(m / tr))).unwrap()
    }

    /// Term-by-term expansion with explicit index loops.
    fn dissipator_by_loops(o: &CMatrix, rho: &CMatrix) -> CMatrix {
        let n = o.nrows();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = c(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        // (O rho O^dagger)_ij
                        acc += o[(i, a)] * rho[(a, b)] * o[(j, b)].conj();
                    }
                }
                for a in 0..n {
                    for b in 0..n {
                        // (rho O^dagger O)_ij and (O^dagger O rho)_ij
                        acc -= 0.5 * rho[(i, a)] * o[(b, a)].conj() * o[(b, j)];
                        acc -= 0.5 * o[(a, i)].conj() * o[(a, b)] * rho[(b, j)];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    #[test]
    fn pointer_states_are_annihilated() {
        let n = sigma_z_half();
        for i in 0..2 {
            let rho = DensityMatrix::pointer_state(2, i).unwrap();
            assert!(lindblad_dissipator(&n, &rho).unwrap().iter().all(|z| z.norm() == 0.0));
            assert!(innovation(&n, &rho).unwrap().iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn zero_operator_gives_zero() {
        let rho = random_state(3, 4);
        let zero = CMatrix::zeros(3, 3);
        assert!(lindblad_dissipator(&zero, &rho).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn dissipator_matches_loop_expansion_and_is_traceless() {
        for seed in 0..20 {
            let o = random_matrix(2, 100 + seed);
            let rho = random_state(2, 200 + seed);
            let fast = lindblad_dissipator(&o, &rho).unwrap();
            let slow = dissipator_by_loops(&o, rho.matrix());
            assert!((&fast - &slow).iter().all(|z| z.norm() < 1e-14));
            assert!(fast.trace().norm() < 1e-13);
            assert!(hermiticity_defect(&fast) < 1e-14);
        }
    }

    #[test]
    fn innovation_of_sigma_z_on_mixed_state() {
        let rho = DensityMatrix::maximally_mixed(2);
        let d = innovation(&sigma_z_half(), &rho).unwrap();
        assert!((&d - sigma_z_half()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn innovation_is_traceless() {
        for seed in 0..10 {
            let o = random_matrix(3, 300 + seed);
            let rho = random_state(3, 400 + seed);
            assert!(innovation(&o, &rho).unwrap().trace().norm() < 1e-13);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = DensityMatrix::maximally_mixed(2);
        let o = CMatrix::zeros(3, 3);
        assert!(matches!(lindblad_dissipator(&o, &rho), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(innovation(&o, &rho), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_step_is_identity() {
        let model = BelavkinModel::new(
            CMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(-0.3, 0.0)]),
            sigma_z_half(),
            vec![random_matrix(2, 9)],
            5.0,
        )
        .unwrap();
        let rho = random_state(2, 10);
        let next = em_step_matrix(&model, &rho, 0.0, 0.0).unwrap();
        assert!((next.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn pointer_state_is_fixed_for_any_increment() {
        let n = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.4, 0.1), c(-0.2, 0.3), c(1.0, 0.0)]));
        let model = BelavkinModel::new(CMatrix::zeros(3, 3), n, vec![], 50.0).unwrap();
        model.require_normal().unwrap();
        for i in 0..3 {
            let rho = DensityMatrix::pointer_state(3, i).unwrap();
            for dw in [-0.3, 0.0, 0.05, 1.7] {
                let next = em_step_matrix(&model, &rho, 1e-3, dw).unwrap();
                assert_eq!(next, rho);
            }
        }
    }

    #[test]
    fn positivity_violation_is_a_structured_error() {
        let model = BelavkinModel::new(CMatrix::zeros(2, 2), sigma_z_half(), vec![], 1e4).unwrap();
        let rho = DensityMatrix::from_populations(&[0.9, 0.1]).unwrap();
        let err = em_step_matrix(&model, &rho, 1e-2, -0.5).unwrap_err();
        match err {
            Error::NotPositive { eigenvalue, .. } => assert!(eigenvalue < -1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_hamiltonian_is_rejected() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(BelavkinModel::new(h, sigma_z_half(), vec![], 1.0).is_err());
    }

    #[test]
    fn non_normal_measurement_is_flagged() {
        let n = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let model = BelavkinModel::new(CMatrix::zeros(2, 2), n, vec![], 1.0).unwrap();
        assert!(model.require_normal().is_err());
    }
}
