use rand::Rng;

use super::matrix::ComplexMatrix;
use super::state::{bb84_state, DensityOperator, TOL};
use crate::error::{Error, Result};

/// Positive operator-valued measure {Γ_x}.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    /// Checks 0 ≤ Γ_x ≤ I and Σ Γ_x = I within [`TOL`].
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidPovm("no elements".into()))?;
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.rows() != d || e.cols() != d {
                return Err(Error::InvalidPovm(format!("element {i} has wrong shape")));
            }
            if !e.is_hermitian(TOL) {
                return Err(Error::InvalidPovm(format!("element {i} is not Hermitian")));
            }
            let eig = e.hermitian_eigenvalues();
            if eig[0] < -TOL || eig[eig.len() - 1] > 1.0 + TOL {
                return Err(Error::InvalidPovm(format!("element {i} not within [0, I]")));
            }
            sum = &sum + e;
        }
        if !sum.approx_eq(&ComplexMatrix::identity(d), TOL) {
            return Err(Error::InvalidPovm("elements do not sum to identity".into()));
        }
        Ok(Self { elements })
    }

    /// Computational-basis measurement on `qubits` qubits.
    pub fn computational(qubits: usize) -> Self {
        let d = 1 << qubits;
        let elements = (0..d).map(|i| DensityOperator::basis(qubits, i).into_matrix()).collect();
        Self { elements }
    }

    /// Single-qubit measurement in the BB84 basis `basis` (0 = Z, 1 = X);
    /// outcome x corresponds to φ_{x,basis}.
    pub fn bb84(basis: u8) -> Self {
        let elements = (0..2).map(|x| bb84_state(x, basis).to_density().into_matrix()).collect();
        Self { elements }
    }

    /// Two-outcome measurement {M, I − M}.
    pub fn binary(m: ComplexMatrix) -> Result<Self> {
        let d = m.rows();
        let rest = &ComplexMatrix::identity(d) - &m;
        Self::new(vec![m, rest])
    }

    /// Embeds a measurement acting on qubit `target` of an `n`-qubit register.
    pub fn on_qubit(&self, target: usize, n: usize) -> Result<Self> {
        if self.dim() != 2 || target >= n {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim() });
        }
        let elements = self
            .elements
            .iter()
            .map(|e| {
                let left = ComplexMatrix::identity(1 << target);
                let right = ComplexMatrix::identity(1 << (n - target - 1));
                left.kron(e).kron(&right)
            })
            .collect();
        Ok(Self { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// Born probabilities tr(Γ_x ρ).
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.dim() });
        }
        Ok(self
            .elements
            .iter()
            .map(|e| (e * rho.matrix()).trace().re.max(0.0))
            .collect())
    }

    /// Unnormalized post-measurement state √Γ_x ρ √Γ_x.
    pub fn post_state_unnormalized(&self, rho: &DensityOperator, outcome: usize) -> ComplexMatrix {
        let root = self.elements[outcome].hermitian_map(|v| v.max(0.0).sqrt());
        rho.matrix().conjugate_by(&root).hermitian_part()
    }
}

/// Samples an outcome with probability tr(Γ_x ρ) and returns the normalized
/// post-measurement state. Zero-probability outcomes are never returned.
pub fn measure<R: Rng + ?Sized>(
    rho: &DensityOperator,
    povm: &Povm,
    rng: &mut R,
) -> Result<(usize, DensityOperator)> {
    let probs = povm.probabilities(rho)?;
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut outcome = None;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 1e-15 {
            continue;
        }
        outcome = Some(i);
        if u < p {
            break;
        }
        u -= p;
    }
    let outcome = outcome.ok_or_else(|| Error::InvalidState("all outcomes have zero probability".into()))?;
    let post = povm.post_state_unnormalized(rho, outcome).scale(1.0 / probs[outcome]);
    Ok((outcome, DensityOperator::from_matrix_unchecked(post)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (x, post) = measure(&DensityOperator::basis(1, 0), &Povm::computational(1), &mut rng).unwrap();
            assert_eq!(x, 0);
            assert!(post.approx_eq(&DensityOperator::basis(1, 0), 1e-12));
        }
    }

    #[test]
    fn plus_state_is_balanced_in_z() {
        let plus = bb84_state(0, 1).to_density();
        let p = Povm::computational(1).probabilities(&plus).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_frequency_within_three_sigma() {
        let rho = bb84_state(0, 1).to_density();
        let povm = Povm::new(vec![
            ComplexMatrix::diagonal(&[0.8, 0.1]),
            ComplexMatrix::diagonal(&[0.2, 0.9]),
        ])
        .unwrap();
        let p0 = povm.probabilities(&rho).unwrap()[0];
        assert!((p0 - 0.45).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 100_000;
        let hits = (0..trials).filter(|_| measure(&rho, &povm, &mut rng).unwrap().0 == 0).count();
        let sigma = (p0 * (1.0 - p0) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p0).abs() < 3.0 * sigma);
    }

    #[test]
    fn zero_probability_outcome_never_returned() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityOperator::basis(2, 3);
        for _ in 0..200 {
            assert_eq!(measure(&rho, &Povm::computational(2), &mut rng).unwrap().0, 3);
        }
    }

    #[test]
    fn rejects_non_povm() {
        assert!(Povm::new(vec![ComplexMatrix::diagonal(&[1.0, 0.0])]).is_err());
        assert!(Povm::new(vec![
            ComplexMatrix::diagonal(&[1.5, 0.0]),
            ComplexMatrix::diagonal(&[-0.5, 1.0]),
        ])
        .is_err());
    }
}
