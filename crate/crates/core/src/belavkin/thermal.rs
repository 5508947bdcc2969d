//! Weak-coupling thermal models: diagonal Hamiltonian, normal measurement
//! operator and rank-one couplings `M_kl = Gamma_kl |n_k><n_l|`, all written
//! in the pointer basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::density::{CMatrix, DensityMatrix, PopulationVector, DEFAULT_PSD_TOL};
use super::model::{project, BelavkinModel};
use crate::error::{check_nonnegative, Error, Result};
use crate::twostate::TwoStateParams;

#[derive(Debug, Clone)]
pub struct ThermalModel {
    amplitudes: CMatrix,
    n_values: Vec<Complex64>,
    energies: Vec<f64>,
    gamma: f64,
    psd_tol: f64,
}

impl ThermalModel {
    /// `amplitudes[(k, l)]` is `Gamma_kl`; `n_values` the eigenvalues of the
    /// measurement operator; `energies` the diagonal of the Hamiltonian.
    pub fn new(amplitudes: CMatrix, n_values: Vec<Complex64>, energies: Vec<f64>, gamma: f64) -> Result<Self> {
        let n = amplitudes.nrows();
        if !amplitudes.is_square() || n == 0 {
            return Err(Error::InvalidModel("amplitude matrix must be nonempty and square".into()));
        }
        for len in [n_values.len(), energies.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        check_nonnegative("gamma", gamma)?;
        Ok(Self {
            amplitudes,
            n_values,
            energies,
            gamma,
            psd_tol: DEFAULT_PSD_TOL,
        })
    }

    /// The two-level model with `N = sigma_z / 2`, `H = (w/2) sigma_z` and
    /// transfer amplitudes `sqrt(lambda_plus)`, `sqrt(lambda_minus)`.
    pub fn two_level(lambda_plus: f64, lambda_minus: f64, w: f64, gamma: f64) -> Result<Self> {
        check_nonnegative("lambda_plus", lambda_plus)?;
        check_nonnegative("lambda_minus", lambda_minus)?;
        let z = Complex64::new(0.0, 0.0);
        let amplitudes = CMatrix::from_row_slice(
            2,
            2,
            &[z, Complex64::new(lambda_plus.sqrt(), 0.0), Complex64::new(lambda_minus.sqrt(), 0.0), z],
        );
        Self::new(
            amplitudes,
            vec![Complex64::new(0.5, 0.0), Complex64::new(-0.5, 0.0)],
            vec![0.5 * w, -0.5 * w],
            gamma,
        )
    }

    pub fn with_psd_tolerance(mut self, psd_tol: f64) -> Self {
        self.psd_tol = psd_tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.n_values.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.amplitudes
    }

    pub fn n_values(&self) -> &[Complex64] {
        &self.n_values
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn generator(&self) -> DMatrix<f64> {
        thermal_generator(&self.amplitudes)
    }

    /// The same model as a general Belavkin equation: `H = diag(eps)`,
    /// `N = diag(n)` and all `n^2` rank-one couplings.
    pub fn to_belavkin(&self) -> BelavkinModel {
        let n = self.dim();
        let h = CMatrix::from_diagonal(&DVector::from_iterator(
            n,
            self.energies.iter().map(|&e| Complex64::new(e, 0.0)),
        ));
        let meas = CMatrix::from_diagonal(&DVector::from_vec(self.n_values.clone()));
        let mut couplings = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                let mut m = CMatrix::zeros(n, n);
                m[(k, l)] = self.amplitudes[(k, l)];
                couplings.push(m);
            }
        }
        BelavkinModel::new(h, meas, couplings, self.gamma)
            .expect("thermal models map to valid Belavkin models")
            .with_psd_tolerance(self.psd_tol)
    }
}

/// Generator of the pure-jump chain on `{1..n}`:
/// `G[i][j] = |Gamma_ji|^2 - delta_ij sum_k |Gamma_ki|^2`.
pub fn thermal_generator(amplitudes: &CMatrix) -> DMatrix<f64> {
    let n = amplitudes.nrows();
    let mut g = DMatrix::from_fn(n, n, |i, j| amplitudes[(j, i)].norm_sqr());
    for i in 0..n {
        let out: f64 = (0..n).map(|k| amplitudes[(k, i)].norm_sqr()).sum();
        g[(i, i)] -= out;
    }
    g
}

/// One Euler–Maruyama step written entrywise in the pointer basis
/// (populations `q^i` and phases `r^{ij}`).
pub fn componentwise_step(model: &ThermalModel, rho: &DensityMatrix, dt: f64, dw: f64) -> Result<DensityMatrix> {
    let n = model.dim();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.dim() });
    }
    check_nonnegative("dt", dt)?;
    let r = rho.matrix();
    let g = &model.amplitudes;
    let nv = &model.n_values;
    let sg = model.gamma.sqrt();
    let i_unit = Complex64::new(0.0, 1.0);

    let outflow: Vec<f64> = (0..n).map(|i| (0..n).map(|k| g[(k, i)].norm_sqr()).sum()).collect();
    let mean_signal: f64 = (0..n).map(|a| 2.0 * nv[a].re * r[(a, a)].re).sum();

    let mut raw = r.clone();
    for i in 0..n {
        for j in 0..n {
            let rij = r[(i, j)];
            if i == j {
                let q = rij.re;
                let gain: f64 = (0..n).map(|l| g[(i, l)].norm_sqr() * r[(l, l)].re).sum();
                let drift = gain - outflow[i] * q;
                let noise = sg * (2.0 * nv[i].re - mean_signal) * q;
                raw[(i, i)] = Complex64::new(q + drift * dt + noise * dw, 0.0);
            } else {
                let rotation = -i_unit * (model.energies[i] - model.energies[j]) * rij;
                let damping = -0.5 * (outflow[i] + outflow[j]) * rij;
                let dephasing =
                    -0.5 * model.gamma * rij * (nv[i].norm_sqr() + nv[j].norm_sqr() - 2.0 * nv[i] * nv[j].conj());
                let noise = sg * (nv[i] + nv[j].conj() - mean_signal) * rij;
                raw[(i, j)] = rij + (rotation + damping + dephasing) * dt + noise * dw;
            }
        }
    }
    project(raw, model.psd_tol).map(|s| s.state)
}

/// Outcome of a population step.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationStep {
    pub q: PopulationVector,
    /// Entries pulled back into `[0, 1]` (the vector is renormalized when nonzero).
    pub clamped: usize,
}

/// Euler–Maruyama step of the decoupled population equation
/// `dq = G^T q dt + sqrt(gamma) (2 Re n^i - sum_a 2 Re n^a q^a) q^i dW`.
pub fn population_step(
    generator: &DMatrix<f64>,
    n_values: &[Complex64],
    gamma: f64,
    q: &PopulationVector,
    dt: f64,
    dw: f64,
) -> Result<PopulationStep> {
    let n = q.dim();
    if generator.nrows() != n || generator.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: generator.nrows() });
    }
    if n_values.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: n_values.len() });
    }
    check_nonnegative("gamma", gamma)?;
    let qs = q.as_slice();
    let sg = gamma.sqrt();
    let mean_signal: f64 = qs.iter().zip(n_values).map(|(q, nv)| 2.0 * nv.re * q).sum();
    let mut next: Vec<f64> = (0..n)
        .map(|i| {
            let drift: f64 = (0..n).map(|j| generator[(j, i)] * qs[j]).sum();
            let noise = sg * (2.0 * n_values[i].re - mean_signal) * qs[i];
            qs[i] + drift * dt + noise * dw
        })
        .collect();
    let mut clamped = 0;
    for v in next.iter_mut() {
        if *v < 0.0 || *v > 1.0 {
            *v = v.clamp(0.0, 1.0);
            clamped += 1;
        }
    }
    if clamped > 0 {
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
    }
    Ok(PopulationStep {
        q: PopulationVector::from_trusted(next),
        clamped,
    })
}

/// Scalar description of the two-level thermal model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateReduction {
    /// `lambda = lambda_+ + lambda_-`, `p = lambda_+ / lambda`, and the noise
    /// strength of the scalar equation, `4 * gamma_phys`.
    pub params: TwoStateParams,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub gamma_phys: f64,
    /// Level splitting `w = eps_1 - eps_2`.
    pub w: f64,
    /// `kappa = (gamma_phys + lambda_+ + lambda_- + 2 i w) / 2`: the coherence
    /// `rho^{12}` obeys `d rho^{12} = -kappa rho^{12} dt + sqrt(gamma_phys) (1 - 2q) rho^{12} dW`.
    pub coherence_decay: Complex64,
}

/// Map a two-level thermal model onto the scalar equation
/// `dq = -lambda (q - p) dt + sqrt(gamma) q (1 - q) dW`.
///
/// The physical equation carries `2 sqrt(gamma_phys) q (1 - q)`, so the scalar
/// noise strength is `gamma = 4 gamma_phys`.
pub fn reduce_two_state(model: &ThermalModel) -> Result<TwoStateReduction> {
    if model.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: model.dim() });
    }
    let tol = 1e-12;
    let nv = model.n_values();
    if (nv[0] - Complex64::new(0.5, 0.0)).norm() > tol || (nv[1] - Complex64::new(-0.5, 0.0)).norm() > tol {
        return Err(Error::InvalidModel("two-state reduction needs N = sigma_z / 2".into()));
    }
    let g = model.amplitudes();
    if g[(0, 0)].norm() > tol || g[(1, 1)].norm() > tol {
        return Err(Error::InvalidModel("two-state reduction needs Gamma_11 = Gamma_22 = 0".into()));
    }
    let lambda_plus = g[(0, 1)].norm_sqr();
    let lambda_minus = g[(1, 0)].norm_sqr();
    let lambda = lambda_plus + lambda_minus;
    let gamma_phys = model.gamma();
    let params = TwoStateParams::new(lambda, lambda_plus / lambda, 4.0 * gamma_phys)?;
    let w = model.energies()[0] - model.energies()[1];
    Ok(TwoStateReduction {
        params,
        lambda_plus,
        lambda_minus,
        gamma_phys,
        w,
        coherence_decay: Complex64::new(0.5 * (gamma_phys + lambda), w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belavkin::model::em_step_matrix;
    use crate::rng::stream;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_thermal(n: usize, seed: u64, gamma: f64) -> ThermalModel {
        let mut rng = stream(seed, 0);
        let amps = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let nv = (0..n).map(|_| c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))).collect();
        let eps = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        ThermalModel::new(amps, nv, eps, gamma).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> DensityMatrix {
        let mut rng = stream(seed, 1);
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::new(super::super::density::hermitize(&(m / tr))).unwrap()
    }

    #[test]
    fn generator_of_two_level_model() {
        let (lp, lm) = (0.3, 0.7);
        let model = ThermalModel::two_level(lp, lm, 0.0, 1.0).unwrap();
        let g = model.generator();
        let expected = DMatrix::from_row_slice(2, 2, &[-lm, lm, lp, -lp]);
        assert!((g - expected).iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn generator_matches_definition_loop() {
        let model = random_thermal(4, 11, 1.0);
        let g = model.generator();
        let a = model.amplitudes();
        for i in 0..4 {
            for j in 0..4 {
                let mut want = a[(j, i)].norm_sqr();
                if i == j {
                    for k in 0..4 {
                        want -= a[(k, i)].norm_sqr();
                    }
                }
                assert!((g[(i, j)] - want).abs() < 1e-14);
            }
            let row: f64 = g.row(i).iter().sum();
            assert!(row.abs() < 1e-14);
            for j in 0..4 {
                if i != j {
                    assert!(g[(i, j)] >= 0.0);
                }
            }
        }
        assert!(thermal_generator(&CMatrix::zeros(3, 3)).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn componentwise_agrees_with_matrix_form() {
        for seed in 0..25 {
            let model = random_thermal(3, seed, 10.0);
            let full = model.to_belavkin();
            let rho = random_state(3, 50 + seed);
            let mut rng = stream(seed, 2);
            let dw = 0.03 * rng.random_range(-1.0..1.0);
            let a = em_step_matrix(&full, &rho, 1e-3, dw).unwrap();
            let b = componentwise_step(&model, &rho, 1e-3, dw).unwrap();
            let diff = (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "seed {seed}: {diff:e}");
        }
    }

    #[test]
    fn diagonal_states_stay_exactly_diagonal() {
        let model = random_thermal(3, 5, 10.0);
        let mut rho = DensityMatrix::from_populations(&[0.2, 0.5, 0.3]).unwrap();
        let mut rng = stream(5, 9);
        for _ in 0..1000 {
            let dw = 0.03 * rng.random_range(-1.0..1.0);
            rho = componentwise_step(&model, &rho, 1e-3, dw).unwrap();
            assert!(rho.is_diagonal());
        }
    }

    #[test]
    fn componentwise_zero_step_is_identity() {
        let model = random_thermal(3, 8, 3.0);
        let rho = random_state(3, 8);
        let next = componentwise_step(&model, &rho, 0.0, 0.0).unwrap();
        assert!((next.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn population_step_conserves_total() {
        let model = random_thermal(4, 21, 10.0);
        let g = model.generator();
        let mut q = PopulationVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut rng = stream(21, 3);
        for _ in 0..1000 {
            let dw = 0.03 * rng.random_range(-1.0..1.0);
            let step = population_step(&g, model.n_values(), model.gamma(), &q, 1e-3, dw).unwrap();
            // independent summation, largest entries last
            let mut v = step.q.as_slice().to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let s: f64 = v.iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
            q = step.q;
        }
    }

    #[test]
    fn population_vertices_are_fixed_without_transitions() {
        let nv = vec![c(0.3, 0.0), c(-0.1, 0.0), c(0.7, 0.0)];
        let g = DMatrix::zeros(3, 3);
        for i in 0..3 {
            let q = PopulationVector::vertex(3, i);
            for dw in [-1.0, 0.2, 3.0] {
                let step = population_step(&g, &nv, 100.0, &q, 1e-3, dw).unwrap();
                assert_eq!(step.q, q);
                assert_eq!(step.clamped, 0);
            }
        }
    }

    #[test]
    fn population_zero_step_is_identity() {
        let model = random_thermal(3, 2, 5.0);
        let q = PopulationVector::new(vec![0.25, 0.25, 0.5]).unwrap();
        let step = population_step(&model.generator(), model.n_values(), 5.0, &q, 0.0, 0.0).unwrap();
        assert_eq!(step.q, q);
    }

    #[test]
    fn population_clamps_and_counts() {
        let nv = vec![c(0.5, 0.0), c(-0.5, 0.0)];
        let g = DMatrix::zeros(2, 2);
        let q = PopulationVector::new(vec![0.5, 0.5]).unwrap();
        let step = population_step(&g, &nv, 1e4, &q, 1e-3, 0.5).unwrap();
        assert_eq!(step.clamped, 2);
        assert!((step.q.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduction_of_symmetric_rates() {
        let red = reduce_two_state(&ThermalModel::two_level(0.5, 0.5, 0.0, 2.0).unwrap()).unwrap();
        assert!((red.params.lambda() - 1.0).abs() < 1e-15);
        assert!((red.params.p() - 0.5).abs() < 1e-15);
        assert_eq!(red.params.gamma(), 8.0);
    }

    #[test]
    fn reduction_of_asymmetric_rates() {
        let red = reduce_two_state(&ThermalModel::two_level(0.3, 0.7, 1.5, 2.0).unwrap()).unwrap();
        assert!((red.params.lambda() - 1.0).abs() < 1e-15);
        assert!((red.params.p() - 0.3).abs() < 1e-15);
        assert_eq!(red.w, 1.5);
        assert_eq!(red.coherence_decay, c(0.5 * (2.0 + 1.0), 1.5));
    }

    #[test]
    fn reduction_rejects_other_models() {
        assert!(matches!(
            reduce_two_state(&random_thermal(3, 1, 1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
        let wrong_n = ThermalModel::new(
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert!(reduce_two_state(&wrong_n).is_err());
    }

    #[test]
    fn reduced_scalar_step_matches_full_model() {
        let model = ThermalModel::two_level(0.3, 0.7, 0.8, 25.0).unwrap();
        let red = reduce_two_state(&model).unwrap();
        let full = model.to_belavkin();
        let mut rng = stream(77, 0);
        for _ in 0..200 {
            let q0: f64 = rng.random_range(0.05..0.95);
            let dw = 0.02 * rng.random_range(-1.0..1.0);
            let rho = DensityMatrix::from_populations(&[q0, 1.0 - q0]).unwrap();
            let next = em_step_matrix(&full, &rho, 1e-4, dw).unwrap();
            let scalar = crate::twostate::em_step(&red.params, q0, 1e-4, dw);
            assert!((next.entry(0, 0).re - scalar).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_follows_the_reduced_equation() {
        let model = ThermalModel::two_level(0.3, 0.7, 0.8, 25.0).unwrap();
        let red = reduce_two_state(&model).unwrap();
        let full = model.to_belavkin();
        let (q, p) = (0.6, c(0.1, -0.15));
        let rho = DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c(q, 0.0), p.conj(), p, c(1.0 - q, 0.0)])).unwrap();
        let (dt, dw) = (1e-4, 0.007);
        let next = em_step_matrix(&full, &rho, dt, dw).unwrap();
        let (q1, c1) = crate::twostate::coherent_step(&red, q, p.conj(), dt, dw);
        assert!((next.entry(0, 0).re - q1).abs() < 1e-12);
        assert!((next.entry(0, 1) - c1).norm() < 1e-12);
    }
}
