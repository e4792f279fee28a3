use serde::{Deserialize, Serialize};

use super::classical::{h, maximal_coupling, Coupling, Distribution, JointDistribution};
use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, DensityOperator, Povm};

fn check_dims(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    Ok(())
}

/// ½ tr|ρ − σ|.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    Ok(0.5 * (rho.matrix() - sigma.matrix()).trace_norm())
}

/// Projector onto the positive eigenspace of ρ − σ and the value tr(M(ρ − σ)).
pub fn optimal_test(rho: &DensityOperator, sigma: &DensityOperator) -> Result<(ComplexMatrix, f64)> {
    check_dims(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let m = diff.positive_projector(1e-12);
    let value = (&m * &diff).trace().re;
    Ok((m, value))
}

/// The two-outcome measurement {M, I − M} built from [`optimal_test`];
/// outcome 0 guesses ρ.
pub fn helstrom_povm(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Povm> {
    Povm::binary(optimal_test(rho, sigma)?.0)
}

/// Optimal probability of telling ρ from σ with equal priors.
pub fn helstrom_guess(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    Ok(0.5 + 0.5 * trace_distance(rho, sigma)?)
}

/// Maximal coupling of the outcome distributions of `m` on ρ and σ.
pub fn coupled_measurement(rho: &DensityOperator, sigma: &DensityOperator, m: &Povm) -> Result<Coupling> {
    check_dims(rho, sigma)?;
    let p = Distribution::from_weights(&m.probabilities(rho)?)?;
    let q = Distribution::from_weights(&m.probabilities(sigma)?)?;
    maximal_coupling(&p, &q)
}

/// Classical-quantum state Σ_k p_k |k⟩⟨k| ⊗ ρᵏ_E.
#[derive(Clone, Debug)]
pub struct CqEnsemble {
    entries: Vec<(f64, DensityOperator)>,
}

impl CqEnsemble {
    pub fn new(entries: Vec<(f64, DensityOperator)>) -> Result<Self> {
        let first = entries.first().ok_or_else(|| Error::InvalidDistribution("empty ensemble".into()))?;
        let dim = first.1.dim();
        for (_, rho) in &entries {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: rho.dim() });
            }
        }
        Distribution::new(entries.iter().map(|e| e.0).collect())?;
        Ok(Self { entries })
    }

    /// Classical E embedded as diagonal states, padded to a power-of-two dimension.
    pub fn from_classical(j: &JointDistribution) -> Result<Self> {
        let qubits = j.cols().next_power_of_two().trailing_zeros() as usize;
        let d = 1usize << qubits;
        let entries = (0..j.rows())
            .map(|k| {
                let pk: f64 = (0..j.cols()).map(|e| j.get(k, e)).sum();
                let mut diag = vec![0.0; d];
                if pk > 0.0 {
                    for (e, slot) in diag.iter_mut().enumerate().take(j.cols()) {
                        *slot = j.get(k, e) / pk;
                    }
                } else {
                    diag[0] = 1.0;
                }
                Ok((pk, DensityOperator::classical(&diag)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    /// τ_K ⊗ ρ_E.
    pub fn ideal(keys: usize, rho_e: &DensityOperator) -> Self {
        Self { entries: vec![(1.0 / keys as f64, rho_e.clone()); keys] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, DensityOperator)] {
        &self.entries
    }

    pub fn dim_e(&self) -> usize {
        self.entries[0].1.dim()
    }

    /// ρ_E = Σ_k p_k ρᵏ_E.
    pub fn marginal_e(&self) -> DensityOperator {
        let d = self.dim_e();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (p, rho) in &self.entries {
            acc = &acc + &rho.matrix().scale(*p);
        }
        DensityOperator::from_matrix_unchecked(acc.hermitian_part())
    }

    /// D(ρ_KE, τ_K ⊗ ρ_E), evaluated block by block.
    pub fn distance_from_ideal(&self) -> f64 {
        let rho_e = self.marginal_e();
        let share = rho_e.matrix().scale(1.0 / self.len() as f64);
        0.5 * self
            .entries
            .iter()
            .map(|(p, rho)| (&rho.matrix().scale(*p) - &share).trace_norm())
            .sum::<f64>()
    }

    /// S(K|E) = S(KE) − S(E) in bits.
    pub fn conditional_entropy(&self) -> f64 {
        let joint: f64 = self
            .entries
            .iter()
            .flat_map(|(p, rho)| rho.eigenvalues().into_iter().map(move |v| p * v))
            .filter(|v| *v > 1e-15)
            .map(|v| -v * v.log2())
            .sum();
        joint - self.marginal_e().entropy()
    }

    pub fn is_classical(&self) -> bool {
        self.entries.iter().all(|(_, rho)| {
            let m = rho.matrix();
            (0..m.rows()).all(|i| (0..m.cols()).all(|j| i == j || m.get(i, j).norm() < 1e-12))
        })
    }
}

/// How the measured guessing probability was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuessMethod {
    /// Exact optimum for classical E.
    Exact,
    /// Exact optimum for two keys.
    Helstrom,
    /// Pretty-good measurement; a lower bound on the optimum.
    PrettyGood,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GuessReport {
    pub bound: f64,
    pub measured: f64,
    pub method: GuessMethod,
}

impl GuessReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.measured <= self.bound + tol
    }
}

fn pretty_good_guess(cq: &CqEnsemble) -> f64 {
    let s = cq.marginal_e().into_matrix();
    let inv_sqrt = s.hermitian_map(|v| if v > 1e-12 { 1.0 / v.sqrt() } else { 0.0 });
    cq.entries
        .iter()
        .map(|(p, rho)| {
            let weighted = rho.matrix().scale(*p);
            let pi = weighted.conjugate_by(&inv_sqrt);
            (&pi * &weighted).trace().re
        })
        .sum()
}

/// Compares a guessing probability for K given E with 1/|K| + D(ρ_KE, τ_K ⊗ ρ_E).
pub fn pguess_bound_check(cq: &CqEnsemble) -> GuessReport {
    let bound = 1.0 / cq.len() as f64 + cq.distance_from_ideal();
    let (measured, method) = if cq.is_classical() {
        let d = cq.dim_e();
        let m = (0..d)
            .map(|e| cq.entries.iter().map(|(p, rho)| p * rho.diagonal(e)).fold(0.0, f64::max))
            .sum();
        (m, GuessMethod::Exact)
    } else if cq.len() == 2 {
        let (p0, r0) = &cq.entries[0];
        let (p1, r1) = &cq.entries[1];
        let diff = &r0.matrix().scale(*p0) - &r1.matrix().scale(*p1);
        (0.5 * (1.0 + diff.trace_norm()), GuessMethod::Helstrom)
    } else {
        (pretty_good_guess(cq), GuessMethod::PrettyGood)
    };
    GuessReport { bound, measured, method }
}

/// Both sides of (1−8ε)log|K| − 2h(2ε) ≤ S(K|E) ≤ log|K| − 2ε².
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyReport {
    pub epsilon: f64,
    pub conditional_entropy: f64,
    pub upper_bound: f64,
    /// `None` when ε > 1/4, where the lower bound does not apply.
    pub lower_bound: Option<f64>,
}

impl EntropyReport {
    pub fn upper_holds(&self, tol: f64) -> bool {
        self.conditional_entropy <= self.upper_bound + tol
    }

    pub fn lower_holds(&self, tol: f64) -> Option<bool> {
        self.lower_bound.map(|lb| lb <= self.conditional_entropy + tol)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.upper_holds(tol) && self.lower_holds(tol).unwrap_or(true)
    }
}

pub fn entropy_bounds_check(cq: &CqEnsemble) -> EntropyReport {
    let eps = cq.distance_from_ideal();
    let log_k = (cq.len() as f64).log2();
    EntropyReport {
        epsilon: eps,
        conditional_entropy: cq.conditional_entropy(),
        upper_bound: log_k - 2.0 * eps * eps,
        lower_bound: (eps <= 0.25).then(|| (1.0 - 8.0 * eps) * log_k - 2.0 * h(2.0 * eps)),
    }
}

/// One key length m of an adaptive-length protocol: weight p_m and ρᵐ_KE.
#[derive(Clone, Debug)]
pub struct MixtureTerm {
    pub weight: f64,
    pub state: CqEnsemble,
}

/// Σ_m p_m D(ρᵐ_KE, τᵐ_K ⊗ ρᵐ_E).
pub fn mixture_distance(terms: &[MixtureTerm]) -> Result<f64> {
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    if total > 1.0 + 1e-12 || terms.iter().any(|t| t.weight < 0.0) {
        return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
    }
    Ok(terms.iter().map(|t| t.weight * t.state.distance_from_ideal()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::bb84_state;

    fn zero() -> DensityOperator {
        DensityOperator::basis(1, 0)
    }

    fn plus() -> DensityOperator {
        bb84_state(0, 1).to_density()
    }

    #[test]
    fn trace_distance_examples() {
        assert!(trace_distance(&plus(), &plus()).unwrap().abs() < 1e-12);
        assert!((trace_distance(&zero(), &DensityOperator::basis(1, 1)).unwrap() - 1.0).abs() < 1e-12);
        // ρ − σ = [[1/2, −1/2], [−1/2, −1/2]] has eigenvalues ±1/√2.
        let d = trace_distance(&zero(), &plus()).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(trace_distance(&zero(), &DensityOperator::basis(2, 0)).is_err());
    }

    #[test]
    fn helstrom_examples() {
        assert!((helstrom_guess(&plus(), &plus()).unwrap() - 0.5).abs() < 1e-12);
        assert!((helstrom_guess(&zero(), &DensityOperator::basis(1, 1)).unwrap() - 1.0).abs() < 1e-12);
        let expected = 0.5 + 0.5 * trace_distance(&zero(), &plus()).unwrap();
        assert!((helstrom_guess(&zero(), &plus()).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.853_553_390_593_273_8).abs() < 1e-12);
    }

    #[test]
    fn optimal_test_for_orthogonal_states() {
        let one = DensityOperator::basis(1, 1);
        let (m, v) = optimal_test(&zero(), &one).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(m.approx_eq(zero().matrix(), 1e-12));
    }

    #[test]
    fn optimal_povm_saturates_coupling() {
        let (r, s) = (zero(), plus());
        let povm = helstrom_povm(&r, &s).unwrap();
        let c = coupled_measurement(&r, &s, &povm).unwrap();
        assert!((1.0 - c.prob_equal() - trace_distance(&r, &s).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn guess_bound_examples() {
        let ideal = CqEnsemble::ideal(4, &plus());
        let r = pguess_bound_check(&ideal);
        assert!((r.bound - 0.25).abs() < 1e-12 && (r.measured - 0.25).abs() < 1e-12);

        let correlated = JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let cq = CqEnsemble::from_classical(&correlated).unwrap();
        let r = pguess_bound_check(&cq);
        assert_eq!(r.method, GuessMethod::Exact);
        assert!((cq.distance_from_ideal() - 0.5).abs() < 1e-12);
        assert!((r.measured - 1.0).abs() < 1e-12 && (r.bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let ideal = entropy_bounds_check(&CqEnsemble::ideal(4, &plus()));
        assert!(ideal.epsilon.abs() < 1e-12);
        assert!((ideal.conditional_entropy - 2.0).abs() < 1e-9);
        assert!((ideal.lower_bound.unwrap() - 2.0).abs() < 1e-9 && (ideal.upper_bound - 2.0).abs() < 1e-9);

        let correlated = JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let r = entropy_bounds_check(&CqEnsemble::from_classical(&correlated).unwrap());
        assert!(r.conditional_entropy.abs() < 1e-9);
        assert!((r.upper_bound - 0.5).abs() < 1e-12);
        assert!(r.lower_bound.is_none());
        assert!(r.holds(1e-9));
    }

    #[test]
    fn mixture_examples() {
        let correlated = JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let leaky = CqEnsemble::from_classical(&correlated).unwrap();
        let ideal = CqEnsemble::ideal(2, &zero());
        let single = mixture_distance(&[MixtureTerm { weight: 0.7, state: leaky.clone() }]).unwrap();
        assert!((single - 0.7 * leaky.distance_from_ideal()).abs() < 1e-12);
        let two = mixture_distance(&[
            MixtureTerm { weight: 0.3, state: leaky.clone() },
            MixtureTerm { weight: 0.6, state: ideal.clone() },
        ])
        .unwrap();
        assert!((two - 0.15).abs() < 1e-12);
        assert!(mixture_distance(&[MixtureTerm { weight: 0.9, state: ideal }]).unwrap().abs() < 1e-12);
    }
}
