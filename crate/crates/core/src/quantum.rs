//! Dense, desk-scale quantum model of k identical particles in n modes:
//! the symmetric power with its occupancy basis, the uniform (maximally
//! mixed) state, the all-birthdays measurement, symmetrized product
//! states, unitary lifts, and empirical Haar averaging.
//!
//! Everything is double-precision and dimension-capped; this module exists
//! as a correctness oracle for the combinatorial layer, not for scale.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exact::multiset_coefficient;
use crate::occupancy::{occupancy_vectors, OccupancyVector};
use crate::rng::RngStream;

/// Largest allowed dimension of a symmetric-power basis.
pub const BASIS_DIMENSION_CAP: u64 = 10_000;
/// Largest symmetric-power dimension for which unitary lifts are built.
pub const LIFT_DIMENSION_CAP: u64 = 1_000;

/// Tolerance on the norm of a pure state.
pub const STATE_NORM_TOL: f64 = 1e-10;
/// Tolerances on density matrices: hermiticity and trace at 1e-10,
/// eigenvalues no lower than -1e-9 (tiny negatives count as zero).
pub const DENSITY_TOL: f64 = 1e-10;
pub const EIGENVALUE_FLOOR: f64 = -1e-9;
/// Max-entry tolerance on U U† = I for directly sampled unitaries.
pub const UNITARY_TOL: f64 = 1e-9;
/// Looser tolerance for lifted unitaries, which accumulate more rounding.
pub const LIFT_UNITARY_TOL: f64 = 1e-8;

/// A normalized complex state vector.
#[derive(Clone, Debug)]
pub struct PureState {
    amps: DVector<Complex64>,
}

impl PureState {
    /// Wraps amplitudes whose squared moduli already sum to one within
    /// [`STATE_NORM_TOL`].
    pub fn new(amps: DVector<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::domain("empty state vector"));
        }
        let norm_sq = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (norm_sq - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::domain(format!(
                "state vector is not normalized (|psi|^2 = {norm_sq})"
            )));
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary amplitudes to unit norm.
    pub fn normalized(amps: DVector<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::domain("empty state vector"));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::domain("cannot normalize the zero vector"));
        }
        Ok(Self { amps: amps / Complex64::from(norm) })
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amps = DVector::from_element(dim, Complex64::ZERO);
        amps[index] = Complex64::ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// Rank-one projector onto the state.
    pub fn density_matrix(&self) -> DensityMatrix {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix { m }
    }
}

/// A density operator: Hermitian, unit trace, eigenvalues bounded below by
/// [`EIGENVALUE_FLOOR`].
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.is_empty() {
            return Err(Error::domain("density matrix must be square and nonempty"));
        }
        let hermitian_defect = (&m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if hermitian_defect > DENSITY_TOL {
            return Err(Error::domain(format!(
                "matrix is not Hermitian (defect {hermitian_defect:.3e})"
            )));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(Error::domain(format!("trace is {trace}, expected 1")));
        }
        let eigenvalues = nalgebra::linalg::SymmetricEigen::new(m.clone()).eigenvalues;
        let min_eig = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::domain(format!(
                "matrix has a negative eigenvalue ({min_eig:.3e})"
            )));
        }
        Ok(Self { m })
    }

    fn from_valid(m: DMatrix<Complex64>) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Real diagonal, i.e. the outcome distribution of the measurement
    /// that this basis represents.
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    /// Row-major entries as [re, im] pairs, for JSON reports.
    pub fn to_reim_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| [self.m[(i, j)].re, self.m[(i, j)].im])
                    .collect()
            })
            .collect()
    }
}

/// The maximally mixed state: identity over the dimension.
pub fn uniform_state(dim: usize) -> DensityMatrix {
    assert!(dim >= 1, "dimension must be positive");
    let scale = Complex64::from(1.0 / dim as f64);
    DensityMatrix::from_valid(DMatrix::from_diagonal_element(dim, dim, scale))
}

/// Half the sum of the absolute eigenvalues of the difference.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim(), "dimension mismatch");
    let diff = a.matrix() - b.matrix();
    let eigenvalues = nalgebra::linalg::SymmetricEigen::new(diff).eigenvalues;
    0.5 * eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

/// A matrix verified unitary at construction (max-entry norm on
/// U U† − I).
#[derive(Clone, Debug)]
pub struct UnitaryMatrix {
    m: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    pub fn new(m: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.is_empty() {
            return Err(Error::domain("unitary matrix must be square and nonempty"));
        }
        let defect = unitarity_defect(&m);
        if defect > tol {
            return Err(Error::domain(format!(
                "matrix is not unitary within {tol:.1e} (defect {defect:.3e})"
            )));
        }
        Ok(Self { m })
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let product = m * m.adjoint();
    let identity = DMatrix::<Complex64>::identity(m.nrows(), m.ncols());
    (product - identity).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Haar-distributed unitary: QR of an i.i.d. complex Gaussian matrix with
/// the R diagonal's phases folded back into Q.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> UnitaryMatrix {
    assert!(dim >= 1, "dimension must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let gaussian = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = gaussian.qr();
    let r = qr.r();
    let mut u = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() == 0.0 {
            Complex64::ONE
        } else {
            rjj / Complex64::from(rjj.norm())
        };
        for i in 0..dim {
            u[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(u, UNITARY_TOL).expect("QR of a Gaussian matrix is unitary")
}

/// Result of conjugating a state by random lifted unitaries.
#[derive(Clone, Debug, serde::Serialize)]
pub struct InvarianceReport {
    pub trials: u64,
    pub tolerance: f64,
    pub max_residual: f64,
    pub invariant: bool,
}

/// The k-particle symmetric power of an n-mode space, carried in its
/// colex-ordered occupancy basis.
pub struct SymmetricSpace {
    n: u64,
    k: u64,
    labels: Vec<OccupancyVector>,
    index: HashMap<Vec<u64>, usize>,
}

impl SymmetricSpace {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        let dim = multiset_coefficient(n, k)?;
        if dim > BigUint::from(BASIS_DIMENSION_CAP) {
            return Err(Error::size_cap("symmetric basis", &dim, BASIS_DIMENSION_CAP));
        }
        let labels: Vec<OccupancyVector> = occupancy_vectors(n, k).collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, occ)| (occ.counts().to_vec(), i))
            .collect();
        Ok(Self { n, k, labels, index })
    }

    pub fn modes(&self) -> u64 {
        self.n
    }

    pub fn particles(&self) -> u64 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[OccupancyVector] {
        &self.labels
    }

    pub fn basis_index(&self, counts: &[u64]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    pub fn uniform_state(&self) -> DensityMatrix {
        uniform_state(self.dim())
    }

    /// The all-birthdays measurement: the diagonal of the state in the
    /// occupancy basis, aligned with [`Self::labels`].
    pub fn birthday_measurement_distribution(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::domain(format!(
                "state dimension {} does not match basis dimension {}",
                rho.dim(),
                self.dim()
            )));
        }
        Ok(rho.diagonal_probabilities())
    }

    /// The symmetrized k-fold product of a single-mode state: amplitude
    /// sqrt(k!/prod m_i!) prod_i psi_i^{m_i} on each occupancy label. Its
    /// measurement distribution is the multinomial of the squared moduli.
    pub fn symmetrize_product_state(&self, psi: &PureState) -> Result<PureState> {
        if psi.dim() != self.n as usize {
            return Err(Error::domain(format!(
                "single-particle state has dimension {}, expected {}",
                psi.dim(),
                self.n
            )));
        }
        let column: Vec<Complex64> = psi.amplitudes().iter().copied().collect();
        let expanded = apply_symmetric_factors(seed_state(self.n as usize), &column, self.k);
        let mut amps = DVector::from_element(self.dim(), Complex64::ZERO);
        for (occ, amp) in expanded {
            amps[self.index[&occ]] = amp;
        }
        PureState::normalized(amps)
    }

    /// Matrix of the symmetric-power action of `u` in the occupancy basis,
    /// built by expanding each basis label's image and rescaling with the
    /// multinomial normalization.
    pub fn lift_unitary(&self, u: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if u.dim() != self.n as usize {
            return Err(Error::domain(format!(
                "unitary acts on dimension {}, expected {}",
                u.dim(),
                self.n
            )));
        }
        if self.dim() as u64 > LIFT_DIMENSION_CAP {
            return Err(Error::size_cap(
                "unitary lift",
                self.dim(),
                LIFT_DIMENSION_CAP,
            ));
        }
        let n = self.n as usize;
        let columns: Vec<Vec<Complex64>> = (0..n)
            .map(|j| (0..n).map(|i| u.matrix()[(i, j)]).collect())
            .collect();
        let mut lifted = DMatrix::from_element(self.dim(), self.dim(), Complex64::ZERO);
        for (col_idx, label) in self.labels.iter().enumerate() {
            let mut state = seed_state(n);
            for (j, &copies) in label.counts().iter().enumerate() {
                if copies > 0 {
                    state = apply_symmetric_factors(state, &columns[j], copies);
                }
            }
            for (occ, amp) in state {
                lifted[(self.index[&occ], col_idx)] = amp;
            }
        }
        UnitaryMatrix::new(lifted, LIFT_UNITARY_TOL)
    }

    /// Empirical Haar average (1/M) Σᵢ Lᵢ σ Lᵢ† over M
    /// lifted Haar unitaries. Accumulation order is fixed, so the result
    /// depends only on (seed, M).
    pub fn haar_average_state(
        &self,
        sigma: &DensityMatrix,
        draws: u64,
        rng: &mut RngStream,
    ) -> Result<DensityMatrix> {
        if sigma.dim() != self.dim() {
            return Err(Error::domain("state dimension does not match the basis"));
        }
        if draws == 0 {
            return Err(Error::domain("need at least one Haar draw"));
        }
        let d = self.dim();
        let mut acc = DMatrix::from_element(d, d, Complex64::ZERO);
        for _ in 0..draws {
            let lifted = self.lift_unitary(&haar_unitary(self.n as usize, rng))?;
            let conjugated = lifted.matrix() * sigma.matrix() * lifted.matrix().adjoint();
            acc += conjugated;
        }
        acc /= Complex64::from(draws as f64);
        DensityMatrix::new(acc)
    }

    /// Conjugate `rho` by lifted Haar unitaries and report the worst
    /// max-entry deviation from `rho` itself.
    pub fn verify_invariance(
        &self,
        rho: &DensityMatrix,
        trials: u64,
        tolerance: f64,
        rng: &mut RngStream,
    ) -> Result<InvarianceReport> {
        if rho.dim() != self.dim() {
            return Err(Error::domain("state dimension does not match the basis"));
        }
        let mut max_residual = 0.0f64;
        for _ in 0..trials {
            let lifted = self.lift_unitary(&haar_unitary(self.n as usize, rng))?;
            let conjugated = lifted.matrix() * rho.matrix() * lifted.matrix().adjoint();
            let residual = (conjugated - rho.matrix())
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            max_residual = max_residual.max(residual);
        }
        Ok(InvarianceReport {
            trials,
            tolerance,
            max_residual,
            invariant: max_residual <= tolerance,
        })
    }
}

fn seed_state(n: usize) -> HashMap<Vec<u64>, Complex64> {
    let mut state = HashMap::new();
    state.insert(vec![0u64; n], Complex64::ONE);
    state
}

/// Multiply a partially built symmetric state by `copies` factors of one
/// single-particle column, keeping coefficients scaled as amplitudes:
/// adding a particle in mode i multiplies by
/// column[i] * sqrt(m_i + 1) / sqrt(s + 1), with m_i the mode's current
/// count and s the number of factors already taken from this column. Every
/// intermediate coefficient set is a unit vector, so nothing overflows
/// even at large particle number.
fn apply_symmetric_factors(
    state: HashMap<Vec<u64>, Complex64>,
    column: &[Complex64],
    copies: u64,
) -> HashMap<Vec<u64>, Complex64> {
    let mut current = state;
    for s in 0..copies {
        let step_scale = 1.0 / ((s + 1) as f64).sqrt();
        let mut next: HashMap<Vec<u64>, Complex64> =
            HashMap::with_capacity(current.len() * column.len());
        for (occ, amp) in &current {
            for (i, &u_i) in column.iter().enumerate() {
                if u_i == Complex64::ZERO {
                    continue;
                }
                let factor = u_i * Complex64::from(((occ[i] + 1) as f64).sqrt() * step_scale);
                let mut key = occ.clone();
                key[i] += 1;
                *next.entry(key).or_insert(Complex64::ZERO) += amp * factor;
            }
        }
        current = next;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::sample_simplex_uniform;
    use crate::stats::ks_test;
    use statrs::function::gamma::ln_gamma;

    fn multinomial_pmf(k: u64, probs: &[f64], counts: &[u64]) -> f64 {
        assert_eq!(counts.iter().sum::<u64>(), k);
        let mut ln = ln_gamma(k as f64 + 1.0);
        for (&m, &p) in counts.iter().zip(probs) {
            ln -= ln_gamma(m as f64 + 1.0);
            if m > 0 {
                ln += m as f64 * p.ln();
            }
        }
        ln.exp()
    }

    fn random_pure_state(n: usize, rng: &mut RngStream) -> PureState {
        let amps = DVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        });
        PureState::normalized(amps).unwrap()
    }

    #[test]
    fn basis_labels_and_dimensions() {
        let space = SymmetricSpace::new(2, 2).unwrap();
        let labels: Vec<&[u64]> = space.labels().iter().map(|l| l.counts()).collect();
        assert_eq!(labels, vec![&[2, 0][..], &[1, 1], &[0, 2]]);

        assert_eq!(SymmetricSpace::new(3, 2).unwrap().dim(), 6);
        assert_eq!(SymmetricSpace::new(1, 5).unwrap().dim(), 1);
        assert!(matches!(
            SymmetricSpace::new(300, 5),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn uniform_state_diagonal() {
        let rho = uniform_state(6);
        let trace = rho.matrix().trace();
        assert!((trace.re - 1.0).abs() < 1e-15);
        for p in rho.diagonal_probabilities() {
            assert_eq!(p, 1.0 / 6.0);
        }
        let one = uniform_state(1);
        assert_eq!(one.matrix()[(0, 0)], Complex64::ONE);
    }

    #[test]
    fn density_matrix_validation_rejects_bad_input() {
        let not_hermitian = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.3, 0.1),
                Complex64::new(0.7, 0.1),
                Complex64::new(0.5, 0.0),
            ],
        );
        assert!(DensityMatrix::new(not_hermitian).is_err());

        let wrong_trace = DMatrix::from_diagonal_element(2, 2, Complex64::from(1.0));
        assert!(DensityMatrix::new(wrong_trace).is_err());

        let negative = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::from(1.5),
            Complex64::from(-0.5),
        ]));
        assert!(DensityMatrix::new(negative).is_err());
    }

    #[test]
    fn measurement_of_uniform_state_is_uniform() {
        let space = SymmetricSpace::new(3, 2).unwrap();
        let probs = space
            .birthday_measurement_distribution(&space.uniform_state())
            .unwrap();
        assert_eq!(probs.len(), 6);
        for p in probs {
            assert_eq!(p, 1.0 / 6.0);
        }
    }

    #[test]
    fn measurement_of_basis_state_is_deterministic() {
        let space = SymmetricSpace::new(3, 2).unwrap();
        let idx = space.basis_index(&[1, 1, 0]).unwrap();
        let rho = PureState::basis_state(space.dim(), idx).density_matrix();
        let probs = space.birthday_measurement_distribution(&rho).unwrap();
        for (i, p) in probs.iter().enumerate() {
            assert_eq!(*p, if i == idx { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn symmetrized_single_mode_state_is_a_basis_state() {
        let space = SymmetricSpace::new(3, 4).unwrap();
        let psi = PureState::basis_state(3, 0);
        let sym = space.symmetrize_product_state(&psi).unwrap();
        let idx = space.basis_index(&[4, 0, 0]).unwrap();
        for (i, a) in sym.amplitudes().iter().enumerate() {
            let expected = if i == idx { 1.0 } else { 0.0 };
            assert!((a.norm() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrized_balanced_qubit_pair() {
        let space = SymmetricSpace::new(2, 2).unwrap();
        let amp = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
        let psi = PureState::new(DVector::from_vec(vec![amp, amp])).unwrap();
        let sym = space.symmetrize_product_state(&psi).unwrap();
        let expected = [
            (vec![2u64, 0], 0.5),
            (vec![1, 1], std::f64::consts::FRAC_1_SQRT_2),
            (vec![0, 2], 0.5),
        ];
        for (counts, magnitude) in expected {
            let idx = space.basis_index(&counts).unwrap();
            assert!((sym.amplitudes()[idx].norm() - magnitude).abs() < 1e-12);
        }
        let probs = space
            .birthday_measurement_distribution(&sym.density_matrix())
            .unwrap();
        let by_label: Vec<f64> = vec![0.25, 0.5, 0.25];
        for (p, want) in probs.iter().zip(by_label) {
            assert!((p - want).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrized_measurement_is_multinomial() {
        let mut rng = RngStream::new(21);
        let space = SymmetricSpace::new(3, 3).unwrap();
        for _ in 0..10 {
            let psi = random_pure_state(3, &mut rng);
            let moduli: Vec<f64> = psi.amplitudes().iter().map(|a| a.norm_sqr()).collect();
            let sym = space.symmetrize_product_state(&psi).unwrap();
            let probs = space
                .birthday_measurement_distribution(&sym.density_matrix())
                .unwrap();
            for (label, p) in space.labels().iter().zip(&probs) {
                let want = multinomial_pmf(3, &moduli, label.counts());
                assert!(
                    (p - want).abs() < 1e-10,
                    "label {label}: got {p}, want {want}"
                );
            }
        }
    }

    #[test]
    fn haar_unitary_is_unitary_and_phase_uniform() {
        let mut rng = RngStream::new(22);
        for _ in 0..100 {
            let u = haar_unitary(8, &mut rng);
            assert!(unitarity_defect(u.matrix()) < 1e-9);
        }
        let u1 = haar_unitary(1, &mut rng);
        assert!((u1.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_first_column_matches_simplex_marginal() {
        let mut rng = RngStream::new(23);
        let mut samples: Vec<f64> = (0..10_000)
            .map(|_| haar_unitary(4, &mut rng).matrix()[(0, 0)].norm_sqr())
            .collect();
        // First coordinate of a uniform simplex point: Beta(1, 3).
        let beta_cdf = |x: f64| 1.0 - (1.0 - x.clamp(0.0, 1.0)).powi(3);
        let result = ks_test(&mut samples, beta_cdf, 1e-3).unwrap();
        assert!(result.pass, "D = {}, p = {}", result.statistic, result.p_value);

        let mut reference: Vec<f64> = (0..10_000)
            .map(|_| sample_simplex_uniform(4, &mut rng, crate::sample::SimplexMethod::Spacings).probs()[0])
            .collect();
        let reference_result = ks_test(&mut reference, beta_cdf, 1e-3).unwrap();
        assert!(reference_result.pass);
    }

    #[test]
    fn lift_of_identity_is_identity() {
        let space = SymmetricSpace::new(3, 2).unwrap();
        let lifted = space.lift_unitary(&UnitaryMatrix::identity(3)).unwrap();
        let identity = DMatrix::<Complex64>::identity(6, 6);
        let defect = (lifted.matrix() - identity).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(defect < 1e-12);
    }

    #[test]
    fn lift_of_diagonal_phases_is_monomial() {
        let space = SymmetricSpace::new(3, 2).unwrap();
        let phases = [0.3f64, 1.1, -0.7];
        let diag = DMatrix::from_diagonal(&DVector::from_vec(
            phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect(),
        ));
        let lifted = space.lift_unitary(&UnitaryMatrix::new(diag, 1e-12).unwrap()).unwrap();
        for (col, label) in space.labels().iter().enumerate() {
            let total_phase: f64 = label
                .counts()
                .iter()
                .zip(&phases)
                .map(|(&m, &t)| m as f64 * t)
                .sum();
            for row in 0..space.dim() {
                let want = if row == col {
                    Complex64::from_polar(1.0, total_phase)
                } else {
                    Complex64::ZERO
                };
                assert!((lifted.matrix()[(row, col)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lift_respects_composition() {
        let mut rng = RngStream::new(24);
        let space = SymmetricSpace::new(3, 2).unwrap();
        for _ in 0..5 {
            let u = haar_unitary(3, &mut rng);
            let v = haar_unitary(3, &mut rng);
            let uv = UnitaryMatrix::new(u.matrix() * v.matrix(), 1e-9).unwrap();
            let lifted_product = space.lift_unitary(&u).unwrap().matrix().clone()
                * space.lift_unitary(&v).unwrap().matrix();
            let lifted_of_product = space.lift_unitary(&uv).unwrap();
            let defect = (lifted_product - lifted_of_product.matrix())
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!(defect < 1e-8, "composition defect {defect}");
        }
    }

    #[test]
    fn uniform_state_is_exactly_invariant() {
        let mut rng = RngStream::new(25);
        let space = SymmetricSpace::new(3, 2).unwrap();
        let report = space
            .verify_invariance(&space.uniform_state(), 50, 1e-8, &mut rng)
            .unwrap();
        assert!(report.invariant, "residual {}", report.max_residual);
    }

    #[test]
    fn concentrated_diagonal_state_is_not_invariant() {
        let mut rng = RngStream::new(26);
        let space = SymmetricSpace::new(3, 2).unwrap();
        let rho = PureState::basis_state(6, 0).density_matrix();
        let report = space.verify_invariance(&rho, 50, 1e-8, &mut rng).unwrap();
        assert!(!report.invariant);
        assert!(report.max_residual > 0.01);
    }

    #[test]
    fn haar_average_invariance_of_uniform_state() {
        let mut rng = RngStream::new(27);
        let space = SymmetricSpace::new(3, 2).unwrap();
        let averaged = space
            .haar_average_state(&space.uniform_state(), 25, &mut rng)
            .unwrap();
        assert!(trace_distance(&averaged, &space.uniform_state()) < 1e-12);
    }

    #[test]
    fn haar_average_converges_toward_uniform() {
        let space = SymmetricSpace::new(3, 2).unwrap();
        let idx = space.basis_index(&[1, 1, 0]).unwrap();
        let sigma = PureState::basis_state(6, idx).density_matrix();
        let mut coarse = Vec::new();
        let mut fine = Vec::new();
        for seed in 0..20 {
            let mut rng = RngStream::new(1000 + seed);
            let rho = space.haar_average_state(&sigma, 1000, &mut rng).unwrap();
            coarse.push(trace_distance(&rho, &space.uniform_state()));
            let mut rng = RngStream::new(1000 + seed);
            let rho = space.haar_average_state(&sigma, 4000, &mut rng).unwrap();
            fine.push(trace_distance(&rho, &space.uniform_state()));
        }
        let median = |xs: &mut Vec<f64>| {
            xs.sort_unstable_by(f64::total_cmp);
            xs[xs.len() / 2]
        };
        let coarse_median = median(&mut coarse);
        let fine_median = median(&mut fine);
        assert!(
            fine_median < coarse_median,
            "M=4000 median {fine_median} should beat M=1000 median {coarse_median}"
        );
    }

    #[test]
    fn aggregated_product_states_reproduce_the_uniform_table_law() {
        let mut rng = RngStream::new(28);
        let space = SymmetricSpace::new(3, 2).unwrap();
        let draws = 10_000;
        let mut mean = vec![0.0f64; space.dim()];
        for _ in 0..draws {
            let psi = random_pure_state(3, &mut rng);
            let sym = space.symmetrize_product_state(&psi).unwrap();
            for (m, a) in mean.iter_mut().zip(sym.amplitudes().iter()) {
                *m += a.norm_sqr();
            }
        }
        for m in &mut mean {
            *m /= draws as f64;
        }
        let uniform = vec![1.0 / space.dim() as f64; space.dim()];
        let tv = crate::stats::total_variation(&mean, &uniform).unwrap();
        assert!(tv < 0.02, "TV to uniform = {tv}");
    }

    #[test]
    fn measurement_pushforward_matches_exact_profile_distribution() {
        use crate::exact::{exact_profile_distribution, ratio_to_f64};
        let space = SymmetricSpace::new(4, 3).unwrap();
        let probs = space
            .birthday_measurement_distribution(&space.uniform_state())
            .unwrap();
        let mut by_profile: HashMap<crate::occupancy::CollisionProfile, f64> = HashMap::new();
        for (label, p) in space.labels().iter().zip(&probs) {
            *by_profile.entry(label.collision_profile()).or_insert(0.0) += p;
        }
        let exact = exact_profile_distribution(4, 3).unwrap();
        assert_eq!(by_profile.len(), exact.len());
        for (profile, mass) in exact {
            let got = by_profile[&profile];
            assert!((got - ratio_to_f64(&mass)).abs() < 1e-12);
        }
    }
}
