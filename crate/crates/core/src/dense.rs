//! Exact density-matrix oracle for small systems.
//!
//! Basis index bit `q` is qubit `q`. A bipartite state on `2n` qubits stores
//! the right tensor factor in qubits `0..n` and the left factor in qubits
//! `n..2n`, so the basis index is `left * 2^n + right`. All entropies are in
//! nats.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::gf2::{BitString, PauliString};

/// Largest total qubit count the oracle accepts (dimension `2^10`).
pub const MAX_QUBITS: usize = 10;
/// Eigenvalues below this are treated as zero inside logarithms.
pub const EIGEN_TOL: f64 = 1e-12;
/// Weight above which a direction counts as inside the support of a state.
pub const SUPPORT_TOL: f64 = 1e-9;

const VALIDATION_TOL: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{qubits} qubits exceed the oracle cap of {max}")]
    DimensionCap { qubits: usize, max: usize },
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace {0} is not 1")]
    BadTrace(f64),
    #[error("eigenvalue {0:e} is negative")]
    NegativeEigenvalue(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qubit count {0} outside the supported range")]
    QubitRange(usize),
    #[error("projection has zero probability")]
    ZeroProbability,
}

/// Which tensor factor of a bipartite state an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    matrix: CMatrix,
    qubits: usize,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn qubits_for_dim(dim: usize) -> Result<usize, OracleError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(OracleError::NotPowerOfTwo(dim));
    }
    let q = dim.trailing_zeros() as usize;
    if q > MAX_QUBITS {
        return Err(OracleError::DimensionCap {
            qubits: q,
            max: MAX_QUBITS,
        });
    }
    Ok(q)
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and unitary eigenvectors.
///
/// Delegates to faer: nalgebra's symmetric eigensolver returns non-finite
/// eigenvalues on some highly degenerate low-rank inputs such as Choi states.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let dim = m.nrows();
    let f = faer::Mat::<Complex64>::from_fn(dim, dim, |i, j| m[(i, j)]);
    let eig = f
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigendecomposition converges");
    let values = (0..dim).map(|i| eig.S()[i].re).collect();
    let vectors = CMatrix::from_fn(dim, dim, |i, j| eig.U()[(i, j)]);
    (values, vectors)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `V f(diag) V^dagger`.
fn spectral_apply(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = c(f(v));
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= fv);
    }
    &scaled * vectors.adjoint()
}

impl DenseState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self, OracleError> {
        let state = Self::from_matrix_unchecked(matrix)?;
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Result<Self, OracleError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(OracleError::DimensionMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        let qubits = qubits_for_dim(matrix.nrows())?;
        Ok(Self { matrix, qubits })
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let dev = hermitian_deviation(&self.matrix);
        if dev > VALIDATION_TOL {
            return Err(OracleError::NotHermitian(dev));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > VALIDATION_TOL {
            return Err(OracleError::BadTrace(tr));
        }
        let (values, _) = hermitian_eigen(&self.matrix);
        if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < -VALIDATION_TOL {
                return Err(OracleError::NegativeEigenvalue(min));
            }
        }
        Ok(())
    }

    /// `|psi><psi|` for a normalized amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, OracleError> {
        let qubits = qubits_for_dim(amplitudes.len())?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let v = nalgebra::DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|a| a / norm),
        );
        Ok(Self {
            matrix: &v * v.adjoint(),
            qubits,
        })
    }

    pub fn basis_state(qubits: usize, index: usize) -> Result<Self, OracleError> {
        let dim = 1usize << qubits;
        qubits_for_dim(dim)?;
        let mut amps = vec![c(0.0); dim];
        amps[index] = c(1.0);
        Self::pure(&amps)
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self, OracleError> {
        let dim = 1usize << qubits;
        qubits_for_dim(dim)?;
        Ok(Self {
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
            qubits,
        })
    }

    /// Projector onto `2^{-n/2} sum_z |z>|z>`, with `1 <= n <= 5`.
    pub fn max_entangled(n: usize) -> Result<Self, OracleError> {
        if !(1..=MAX_QUBITS / 2).contains(&n) {
            return Err(OracleError::QubitRange(n));
        }
        let side = 1usize << n;
        let mut amps = vec![c(0.0); side * side];
        for z in 0..side {
            amps[z * side + z] = c(1.0);
        }
        Self::pure(&amps)
    }

    /// `G G^dag / tr(G G^dag)` for a Ginibre matrix `G` with entries uniform in the unit square.
    pub fn random_mixed<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Result<Self, OracleError> {
        if qubits > MAX_QUBITS {
            return Err(OracleError::DimensionCap { qubits, max: MAX_QUBITS });
        }
        let dim = 1usize << qubits;
        let g = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let m = &g * g.adjoint();
        let tr = m.trace();
        Self::new(m / tr)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// `self ⊗ other`, with `self` in the high qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self, OracleError> {
        Self::from_matrix_unchecked(self.matrix.kronecker(&other.matrix))
    }

    /// Traces out every qubit not listed in `keep`. Qubit `j` of the result is
    /// qubit `keep[j]` of the input.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, OracleError> {
        if let Some(&bad) = keep.iter().find(|&&q| q >= self.qubits) {
            return Err(OracleError::QubitRange(bad));
        }
        let traced: Vec<usize> = (0..self.qubits).filter(|q| !keep.contains(q)).collect();
        let out_dim = 1usize << keep.len();
        let scatter = |bits: usize, qs: &[usize]| -> usize {
            qs.iter()
                .enumerate()
                .filter(|(j, _)| bits >> j & 1 == 1)
                .fold(0usize, |acc, (_, &q)| acc | 1 << q)
        };
        let mut out = CMatrix::zeros(out_dim, out_dim);
        for e in 0..1usize << traced.len() {
            let env = scatter(e, &traced);
            for r in 0..out_dim {
                let row = env | scatter(r, keep);
                for col in 0..out_dim {
                    out[(r, col)] += self.matrix[(row, env | scatter(col, keep))];
                }
            }
        }
        Self::from_matrix_unchecked(out)
    }

    /// Conjugates by a monomial unitary `U|i> = phase(i) |target(i)>`.
    pub fn apply_monomial(
        &self,
        map: impl Fn(usize) -> (usize, Complex64),
    ) -> Result<Self, OracleError> {
        let dim = self.dim();
        let images: Vec<(usize, Complex64)> = (0..dim).map(&map).collect();
        let mut out = CMatrix::zeros(dim, dim);
        for (i, &(ti, ci)) in images.iter().enumerate() {
            for (j, &(tj, cj)) in images.iter().enumerate() {
                out[(ti, tj)] = ci * cj.conj() * self.matrix[(i, j)];
            }
        }
        Self::from_matrix_unchecked(out)
    }

    /// Conjugates by the Pauli `p` acting on qubits `offset..offset + p.len()`.
    pub fn apply_pauli_at(&self, p: &PauliString, offset: usize) -> Result<Self, OracleError> {
        if offset + p.len() > self.qubits {
            return Err(OracleError::DimensionMismatch {
                left: offset + p.len(),
                right: self.qubits,
            });
        }
        let mask = |bits: &BitString| -> usize {
            bits.iter()
                .enumerate()
                .filter(|(_, b)| *b)
                .fold(0usize, |acc, (q, _)| acc | 1 << (q + offset))
        };
        let (xm, zm) = (mask(&p.x_part), mask(&p.z_part));
        let phase = [c(1.0), Complex64::i(), c(-1.0), -Complex64::i()][p.phase_exp as usize % 4];
        // X^x Z^z |i> = (-1)^{z.i} |i ^ x>
        self.apply_monomial(|i| {
            let sign = if (i & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            (i ^ xm, phase * sign)
        })
    }

    /// Conjugates one tensor factor of a bipartite state by `p`.
    pub fn apply_pauli(&self, p: &PauliString, side: Side) -> Result<Self, OracleError> {
        let half = self.bipartite_half()?;
        if p.len() != half {
            return Err(OracleError::DimensionMismatch {
                left: p.len(),
                right: half,
            });
        }
        self.apply_pauli_at(p, if side == Side::Left { half } else { 0 })
    }

    /// Conjugates by the 2x2 unitary `u` (row-major) on qubit `q`.
    pub fn apply_single_qubit(&self, u: [Complex64; 4], q: usize) -> Result<Self, OracleError> {
        if q >= self.qubits {
            return Err(OracleError::QubitRange(q));
        }
        let dim = self.dim();
        let bit = 1usize << q;
        let mut tmp = CMatrix::zeros(dim, dim);
        // left multiply
        for i in 0..dim {
            let (i0, i1) = (i & !bit, i | bit);
            let (a, b) = if i & bit == 0 { (u[0], u[1]) } else { (u[2], u[3]) };
            for j in 0..dim {
                tmp[(i, j)] = a * self.matrix[(i0, j)] + b * self.matrix[(i1, j)];
            }
        }
        // right multiply by u^dagger
        let mut out = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let (j0, j1) = (j & !bit, j | bit);
            let (a, b) = if j & bit == 0 { (u[0], u[1]) } else { (u[2], u[3]) };
            for i in 0..dim {
                out[(i, j)] = tmp[(i, j0)] * a.conj() + tmp[(i, j1)] * b.conj();
            }
        }
        Self::from_matrix_unchecked(out)
    }

    pub fn apply_hadamard(&self, q: usize) -> Result<Self, OracleError> {
        let h = c(std::f64::consts::FRAC_1_SQRT_2);
        self.apply_single_qubit([h, h, h, -h], q)
    }

    /// Probability of reading `value` on qubit `q`, and the collapsed state.
    pub fn measure_qubit(&self, q: usize, value: bool) -> Result<(f64, Self), OracleError> {
        if q >= self.qubits {
            return Err(OracleError::QubitRange(q));
        }
        let dim = self.dim();
        let keep = |i: usize| (i >> q & 1 == 1) == value;
        let prob: f64 = (0..dim).filter(|&i| keep(i)).map(|i| self.matrix[(i, i)].re).sum();
        if prob <= 0.0 {
            return Err(OracleError::ZeroProbability);
        }
        let mut out = CMatrix::zeros(dim, dim);
        for i in (0..dim).filter(|&i| keep(i)) {
            for j in (0..dim).filter(|&j| keep(j)) {
                out[(i, j)] = self.matrix[(i, j)] / prob;
            }
        }
        Ok((prob, Self::from_matrix_unchecked(out)?))
    }

    /// Probability that every qubit in `qs` reads the matching bit of `values`.
    pub fn outcome_probability(&self, qs: &[usize], values: &BitString) -> f64 {
        (0..self.dim())
            .filter(|&i| qs.iter().enumerate().all(|(k, &q)| (i >> q & 1 == 1) == values.get(k)))
            .map(|i| self.matrix[(i, i)].re)
            .sum()
    }

    /// Expectation `<psi| rho |psi>`.
    pub fn overlap_with_pure(&self, amplitudes: &[Complex64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        (v.adjoint() * &self.matrix * &v)[(0, 0)].re
    }

    fn bipartite_half(&self) -> Result<usize, OracleError> {
        if !self.qubits.is_multiple_of(2) {
            return Err(OracleError::QubitRange(self.qubits));
        }
        Ok(self.qubits / 2)
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), OracleError> {
        if self.dim() != other.dim() {
            return Err(OracleError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// `-sum lambda log lambda` over eigenvalues above [`EIGEN_TOL`], in nats.
pub fn von_neumann_entropy(rho: &DenseState) -> Result<f64, OracleError> {
    rho.validate()?;
    let (values, _) = hermitian_eigen(rho.matrix());
    Ok(values
        .into_iter()
        .filter(|&l| l > EIGEN_TOL)
        .map(|l| -l * l.ln())
        .sum())
}

/// `Tr[rho (log rho - log sigma)]`, or `f64::INFINITY` when the support of
/// `rho` is not contained in that of `sigma`.
pub fn relative_entropy(rho: &DenseState, sigma: &DenseState) -> Result<f64, OracleError> {
    rho.check_same_dim(sigma)?;
    rho.validate()?;
    sigma.validate()?;
    let (rho_vals, _) = hermitian_eigen(rho.matrix());
    let neg_entropy: f64 = rho_vals
        .into_iter()
        .filter(|&l| l > EIGEN_TOL)
        .map(|l| l * l.ln())
        .sum();
    let (sig_vals, sig_vecs) = hermitian_eigen(sigma.matrix());
    let mut cross = 0.0;
    for (j, &mu) in sig_vals.iter().enumerate() {
        let v = sig_vecs.column(j);
        let weight = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if mu < EIGEN_TOL {
            if weight > SUPPORT_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * mu.ln();
    }
    Ok((neg_entropy - cross).max(0.0))
}

/// `||sqrt(rho) sqrt(sigma)||_1^2`.
pub fn fidelity(rho: &DenseState, sigma: &DenseState) -> Result<f64, OracleError> {
    rho.check_same_dim(sigma)?;
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let sqrt_rho = spectral_apply(&vals, &vecs, |l| l.max(0.0).sqrt());
    let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    let (mu, _) = hermitian_eigen(&inner);
    let tr: f64 = mu.into_iter().map(|m| m.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// `1/2 ||rho - sigma||_1`.
pub fn trace_distance(rho: &DenseState, sigma: &DenseState) -> Result<f64, OracleError> {
    rho.check_same_dim(sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let (vals, _) = hermitian_eigen(&diff);
    Ok(0.5 * vals.into_iter().map(f64::abs).sum::<f64>())
}

/// Free-function form of [`DenseState::apply_pauli`].
pub fn apply_pauli(rho: &DenseState, p: &PauliString, side: Side) -> Result<DenseState, OracleError> {
    rho.apply_pauli(p, side)
}

/// Teleports a `k`-qubit `payload` through a `2k`-qubit `resource`.
///
/// The sender performs a Bell measurement on (payload, resource left half);
/// outcome `(a, b)` labels the Bell state `(X^a Z^b ⊗ I)|gamma>` and triggers
/// the correction `X^a Z^b` on the resource right half, which is returned.
pub fn teleport_through(resource: &DenseState, payload: &DenseState) -> Result<DenseState, OracleError> {
    let k = payload.qubits();
    if resource.qubits() != 2 * k {
        return Err(OracleError::DimensionMismatch {
            left: resource.qubits(),
            right: 2 * k,
        });
    }
    if 3 * k > MAX_QUBITS {
        return Err(OracleError::DimensionCap {
            qubits: 3 * k,
            max: MAX_QUBITS,
        });
    }
    let side = 1usize << k;
    let p = payload.matrix();
    let r = resource.matrix();
    let norm = 1.0 / side as f64;
    let mut total = CMatrix::zeros(side, side);
    for a in 0..side {
        for b in 0..side {
            // Bell amplitude on (payload = z ^ a, left = z) is 2^{-k/2} (-1)^{b.z}
            let sign = |z: usize| if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            let mut branch = CMatrix::zeros(side, side);
            for beta in 0..side {
                for beta2 in 0..side {
                    let mut acc = c(0.0);
                    for z in 0..side {
                        for z2 in 0..side {
                            let coeff = sign(z) * sign(z2) * norm;
                            acc += p[(z ^ a, z2 ^ a)] * r[(z * side + beta, z2 * side + beta2)] * coeff;
                        }
                    }
                    branch[(beta, beta2)] = acc;
                }
            }
            let correction = PauliString::new(
                BitString::from_u64(k, a as u64),
                BitString::from_u64(k, b as u64),
                0,
            )
            .expect("equal lengths");
            let corrected = DenseState { matrix: branch, qubits: k }.apply_pauli_at(&correction, 0)?;
            total += corrected.matrix;
        }
    }
    DenseState::from_matrix_unchecked(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pure(qubits: usize, rng: &mut impl Rng) -> DenseState {
        let amps: Vec<Complex64> = (0..1 << qubits)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        DenseState::pure(&amps).unwrap()
    }

    pub(crate) fn random_mixed(qubits: usize, rng: &mut impl Rng) -> DenseState {
        let dim = 1 << qubits;
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let m = &g * g.adjoint();
        let tr = m.trace();
        DenseState::new(m / tr).unwrap()
    }

    fn diagonal(probs: &[f64]) -> DenseState {
        let d = nalgebra::DVector::from_iterator(probs.len(), probs.iter().map(|&p| c(p)));
        DenseState::new(CMatrix::from_diagonal(&d)).unwrap()
    }

    #[test]
    fn max_entangled_n1_layout() {
        let g = DenseState::max_entangled(1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if [0, 3].contains(&i) && [0, 3].contains(&j) { 0.5 } else { 0.0 };
                assert!((g.matrix()[(i, j)] - c(want)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn max_entangled_is_pure() {
        for n in 1..=3 {
            let g = DenseState::max_entangled(n).unwrap();
            assert!((g.trace() - 1.0).abs() < 1e-12);
            assert!((g.purity() - 1.0).abs() < 1e-12);
        }
        let g2 = DenseState::max_entangled(2).unwrap();
        assert!(von_neumann_entropy(&g2).unwrap().abs() < 1e-9);
        assert_eq!(DenseState::max_entangled(0), Err(OracleError::QubitRange(0)));
        assert_eq!(DenseState::max_entangled(6), Err(OracleError::QubitRange(6)));
    }

    #[test]
    fn entropy_examples() {
        let mixed = DenseState::maximally_mixed(3).unwrap();
        assert!((von_neumann_entropy(&mixed).unwrap() - 8f64.ln()).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(von_neumann_entropy(&random_pure(2, &mut rng)).unwrap().abs() < 1e-9);
    }

    #[test]
    fn invalid_states_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.0), c(0.0)]);
        assert!(matches!(DenseState::new(m), Err(OracleError::NotHermitian(_))));
        let m = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(matches!(DenseState::new(m), Err(OracleError::NegativeEigenvalue(_))));
        let m = CMatrix::identity(2, 2);
        assert!(matches!(DenseState::new(m), Err(OracleError::BadTrace(_))));
        let m = CMatrix::identity(3, 3);
        assert!(matches!(DenseState::new(m), Err(OracleError::NotPowerOfTwo(3))));
        assert!(matches!(
            DenseState::maximally_mixed(11),
            Err(OracleError::DimensionCap { .. })
        ));
    }

    #[test]
    fn relative_entropy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_mixed(2, &mut rng);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-9);

        let pure = random_pure(3, &mut rng);
        let mixed = DenseState::maximally_mixed(3).unwrap();
        assert!((relative_entropy(&pure, &mixed).unwrap() - 8f64.ln()).abs() < 1e-9);

        // support violation
        let a = diagonal(&[0.5, 0.5]);
        let b = diagonal(&[1.0, 0.0]);
        assert_eq!(relative_entropy(&a, &b).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&b, &a).unwrap().is_finite());

        assert!(matches!(
            relative_entropy(&a, &mixed),
            Err(OracleError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn relative_entropy_matches_classical_kl_on_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
            let mut q: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
            let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            let kl: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum();
            let d = relative_entropy(&diagonal(&p), &diagonal(&q)).unwrap();
            assert!(d >= 0.0);
            assert!((d - kl).abs() < 1e-9, "{d} vs {kl}");
        }
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_mixed(2, &mut rng);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        let zero = DenseState::basis_state(2, 0).unwrap();
        let three = DenseState::basis_state(2, 3).unwrap();
        assert!(fidelity(&zero, &three).unwrap().abs() < 1e-9);

        let g = DenseState::max_entangled(1).unwrap();
        let xg = g.apply_pauli(&PauliString::x_string(BitString::ones(1)), Side::Left).unwrap();
        assert!(fidelity(&xg, &g).unwrap().abs() < 1e-9);
    }

    #[test]
    fn fidelity_symmetric_and_pauli_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_mixed(2, &mut rng);
            let b = random_mixed(2, &mut rng);
            let f = fidelity(&a, &b).unwrap();
            assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-9);
            let p = PauliString::new(
                BitString::random(2, &mut rng),
                BitString::random(2, &mut rng),
                rng.gen_range(0..4),
            )
            .unwrap();
            let fa = fidelity(&a.apply_pauli_at(&p, 0).unwrap(), &b.apply_pauli_at(&p, 0).unwrap()).unwrap();
            assert!((f - fa).abs() < 1e-9);
        }
    }

    #[test]
    fn apply_pauli_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_mixed(4, &mut rng);
        let id = PauliString::identity(2);
        assert_eq!(rho.apply_pauli(&id, Side::Left).unwrap(), rho);
        for _ in 0..10 {
            let p = PauliString::new(
                BitString::random(2, &mut rng),
                BitString::random(2, &mut rng),
                rng.gen_range(0..4),
            )
            .unwrap();
            for side in [Side::Left, Side::Right] {
                let twice = rho.apply_pauli(&p, side).unwrap().apply_pauli(&p, side).unwrap();
                assert!((twice.matrix() - rho.matrix()).norm() < 1e-12);
            }
        }
        // (X ⊗ I) on the n=1 Bell state gives the projector onto (|10> + |01>)/sqrt2
        let g = DenseState::max_entangled(1).unwrap();
        let xg = g.apply_pauli(&PauliString::x_string(BitString::ones(1)), Side::Left).unwrap();
        let want = DenseState::pure(&[c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap();
        assert!((xg.matrix() - want.matrix()).norm() < 1e-12);

        assert!(matches!(
            rho.apply_pauli(&PauliString::identity(3), Side::Right),
            Err(OracleError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn entropy_invariant_under_random_pauli() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rho = random_mixed(3, &mut rng);
            let p = PauliString::new(
                BitString::random(3, &mut rng),
                BitString::random(3, &mut rng),
                0,
            )
            .unwrap();
            let s0 = von_neumann_entropy(&rho).unwrap();
            let s1 = von_neumann_entropy(&rho.apply_pauli_at(&p, 0).unwrap()).unwrap();
            assert!((s0 - s1).abs() < 1e-9);
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let g = DenseState::max_entangled(2).unwrap();
        let reduced = g.partial_trace(&[0, 1]).unwrap();
        let mixed = DenseState::maximally_mixed(2).unwrap();
        assert!((reduced.matrix() - mixed.matrix()).norm() < 1e-12);
        assert!(matches!(g.partial_trace(&[4]), Err(OracleError::QubitRange(4))));
    }

    #[test]
    fn partial_trace_reorders_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_mixed(1, &mut rng);
        let b = random_mixed(2, &mut rng);
        let ab = a.tensor(&b).unwrap();
        assert!((ab.partial_trace(&[2]).unwrap().matrix() - a.matrix()).norm() < 1e-12);
        assert!((ab.partial_trace(&[0, 1]).unwrap().matrix() - b.matrix()).norm() < 1e-12);
        let ba = b.tensor(&a).unwrap();
        assert!((ab.partial_trace(&[2, 0, 1]).unwrap().matrix() - ba.matrix()).norm() < 1e-12);
    }

    #[test]
    fn teleport_through_bell_pairs_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 1..=3 {
            let resource = DenseState::max_entangled(k).unwrap();
            for _ in 0..3 {
                let payload = random_mixed(k, &mut rng);
                let out = teleport_through(&resource, &payload).unwrap();
                assert!(trace_distance(&out, &payload).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn measurement_collapses() {
        let g = DenseState::max_entangled(1).unwrap();
        let (p, post) = g.measure_qubit(0, true).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let want = DenseState::basis_state(2, 3).unwrap();
        assert!((post.matrix() - want.matrix()).norm() < 1e-12);
        let zero = DenseState::basis_state(1, 0).unwrap();
        assert_eq!(zero.measure_qubit(0, true), Err(OracleError::ZeroProbability));
    }
}
