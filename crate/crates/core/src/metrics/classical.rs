use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Probability distribution over the alphabet {0, …, len−1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("negative or NaN probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        crate::quantum::state::shannon_bits(&self.probs)
    }
}

/// Joint distribution p(k, e), stored row-major with k as the row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, got: probs.len() });
        }
        Distribution::new(probs.clone())?;
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidDistribution("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn product(a: &Distribution, b: &Distribution) -> Self {
        let probs = a.probs.iter().flat_map(|x| b.probs.iter().map(move |y| x * y)).collect();
        Self { rows: a.len(), cols: b.len(), probs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, e: usize) -> f64 {
        self.probs[k * self.cols + e]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_rows(&self) -> Distribution {
        Distribution { probs: (0..self.rows).map(|k| (0..self.cols).map(|e| self.get(k, e)).sum()).collect() }
    }

    pub fn marginal_cols(&self) -> Distribution {
        Distribution { probs: (0..self.cols).map(|e| (0..self.rows).map(|k| self.get(k, e)).sum()).collect() }
    }

    /// Flattened view as a single distribution.
    pub fn flatten(&self) -> Distribution {
        Distribution { probs: self.probs.clone() }
    }
}

/// Joint distribution of (Z, Z̃) with prescribed marginals.
pub type Coupling = JointDistribution;

impl JointDistribution {
    /// Pr[Z = Z̃].
    pub fn prob_equal(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }
}

fn check_alphabets(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch(p.len(), q.len()));
    }
    Ok(())
}

/// ½ Σ |p − q|.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_alphabets(p, q)?;
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// 1 − Σ min(p, q).
pub fn total_variation_overlap(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_alphabets(p, q)?;
    Ok(1.0 - p.probs.iter().zip(&q.probs).map(|(a, b)| a.min(*b)).sum::<f64>())
}

/// Coupling with Pr[Z = Z̃] = 1 − D(p, q): the diagonal carries min(p, q) and
/// the excess masses are paired as a product.
pub fn maximal_coupling(p: &Distribution, q: &Distribution) -> Result<Coupling> {
    let d = total_variation(p, q)?;
    let n = p.len();
    let mut probs = vec![0.0; n * n];
    for z in 0..n {
        probs[z * n + z] = p.probs[z].min(q.probs[z]);
    }
    if d > 0.0 {
        for z in 0..n {
            let excess_p = p.probs[z] - p.probs[z].min(q.probs[z]);
            if excess_p <= 0.0 {
                continue;
            }
            for w in 0..n {
                let excess_q = q.probs[w] - p.probs[w].min(q.probs[w]);
                probs[z * n + w] += excess_p * excess_q / d;
            }
        }
    }
    Ok(JointDistribution { rows: n, cols: n, probs })
}

/// Σ_e max_k p(k, e).
pub fn pguess_classical(j: &JointDistribution) -> f64 {
    (0..j.cols).map(|e| (0..j.rows).map(|k| j.get(k, e)).fold(0.0, f64::max)).sum()
}

/// −log₂ of [`pguess_classical`].
pub fn min_entropy_classical(j: &JointDistribution) -> f64 {
    -pguess_classical(j).log2()
}

/// Mutual information I(K; E) in bits.
pub fn accessible_information_classical(j: &JointDistribution) -> f64 {
    j.marginal_rows().entropy() + j.marginal_cols().entropy() - j.flatten().entropy()
}

/// Binary entropy in bits with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(h(p))
}

pub(crate) fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed() -> JointDistribution {
        JointDistribution::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap()
    }

    #[test]
    fn total_variation_examples() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q = Distribution::point(2, 0);
        assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
        assert!((total_variation(&p, &q).unwrap() - 0.5).abs() < 1e-15);
        assert!((total_variation_overlap(&p, &q).unwrap() - 0.5).abs() < 1e-15);
        assert!(total_variation(&p, &Distribution::uniform(3)).is_err());
    }

    #[test]
    fn invalid_distribution_rejected() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn coupling_of_half_half_and_point() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q = Distribution::point(2, 0);
        let c = maximal_coupling(&p, &q).unwrap();
        // Hand construction: diagonal min(p,q) = (0.5, 0), excess of p at 1 paired with excess of q at 0.
        assert_eq!(c.probs(), &[0.5, 0.0, 0.5, 0.0]);
        assert!((c.prob_equal() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coupling_of_equal_inputs_is_diagonal() {
        let p = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let c = maximal_coupling(&p, &p).unwrap();
        assert!((c.prob_equal() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn guessing_examples() {
        let indep = JointDistribution::product(&Distribution::uniform(4), &Distribution::new(vec![0.3, 0.7]).unwrap());
        assert!((pguess_classical(&indep) - 0.25).abs() < 1e-15);
        // Exhaustive over the four deterministic guess maps e -> k.
        let j = skewed();
        let best = (0..4)
            .map(|g: usize| (0..2).map(|e| j.get((g >> e) & 1, e)).sum::<f64>())
            .fold(0.0, f64::max);
        assert!((pguess_classical(&j) - best).abs() < 1e-15);
        assert!((best - 0.8).abs() < 1e-15);
        let func = JointDistribution::from_rows(&[vec![0.3, 0.0], vec![0.0, 0.7]]).unwrap();
        assert!((pguess_classical(&func) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528_8).abs() < 1e-9);
        assert!(binary_entropy(1.2).is_err());
    }

    #[test]
    fn information_examples() {
        let j = skewed();
        let expected = 1.0 - h(0.2);
        assert!((accessible_information_classical(&j) - expected).abs() < 1e-12);
        assert!((accessible_information_classical(&j) - 0.278).abs() < 1e-3);
        assert!((min_entropy_classical(&j) - 0.321_928_094_887_362_3).abs() < 1e-12);
        let copy = JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((accessible_information_classical(&copy) - 1.0).abs() < 1e-12);
        assert_eq!(min_entropy_classical(&copy), 0.0);
        let uniform = JointDistribution::product(&Distribution::uniform(8), &Distribution::uniform(2));
        assert!((min_entropy_classical(&uniform) - 3.0).abs() < 1e-12);
        assert!(accessible_information_classical(&uniform).abs() < 1e-12);
    }
}
