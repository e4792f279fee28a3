use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{random_bits, Bits};
use crate::error::{Error, Result};
use crate::metrics::{min_entropy_classical, JointDistribution};

/// Seed of an ℓ×n Toeplitz matrix T[i][j] = seed[i − j + n − 1].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzSeed {
    n: usize,
    l: usize,
    bits: Bits,
}

impl ToeplitzSeed {
    pub fn new(n: usize, l: usize, bits: Bits) -> Result<Self> {
        let expected = (n + l).saturating_sub(1);
        if bits.len() != expected {
            return Err(Error::LengthMismatch { expected, got: bits.len() });
        }
        Ok(Self { n, l, bits })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Self {
        Self { n, l, bits: random_bits(rng, (n + l).saturating_sub(1)) }
    }

    /// Seed `index` in the enumeration of all 2^(n+ℓ−1) seeds; bit j of the
    /// seed is bit j of `index`.
    pub fn from_index(n: usize, l: usize, index: u64) -> Self {
        let len = (n + l).saturating_sub(1);
        Self { n, l, bits: (0..len).map(|j| ((index >> j) & 1) as u8).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.bits[i + self.n - 1 - j]
    }

    /// Row masks for inputs packed big-endian (x_0 is the top bit); n ≤ 64.
    pub fn row_masks(&self) -> Vec<u64> {
        (0..self.l)
            .map(|i| (0..self.n).fold(0u64, |acc, j| (acc << 1) | self.entry(i, j) as u64))
            .collect()
    }
}

/// K = T·X over GF(2).
pub fn pa_extract(x: &[u8], seed: &ToeplitzSeed) -> Result<Bits> {
    if seed.l > x.len() {
        return Err(Error::InvalidParameter {
            field: "l",
            reason: format!("output length {} exceeds input length {}", seed.l, x.len()),
        });
    }
    if x.len() != seed.n {
        return Err(Error::LengthMismatch { expected: seed.n, got: x.len() });
    }
    // Row i reads the reversed seed r at positions l−1−i .. l−1−i+n.
    let pack = |bits: &mut dyn Iterator<Item = u8>, len: usize| {
        let mut words = vec![0u64; len.div_ceil(64) + 1];
        for (j, b) in bits.enumerate() {
            words[j / 64] |= ((b & 1) as u64) << (j % 64);
        }
        words
    };
    let r = pack(&mut seed.bits.iter().rev().copied(), seed.bits.len());
    let xw = pack(&mut x.iter().copied(), x.len());
    let window = |start: usize, w: usize| {
        let (q, o) = ((start / 64) + w, start % 64);
        let lo = r.get(q).copied().unwrap_or(0) >> o;
        let hi = if o == 0 { 0 } else { r.get(q + 1).copied().unwrap_or(0) << (64 - o) };
        lo | hi
    };
    let words = x.len().div_ceil(64);
    Ok((0..seed.l)
        .map(|i| {
            let start = seed.l - 1 - i;
            let ones: u32 = (0..words).map(|w| (window(start, w) & xw[w]).count_ones()).sum();
            (ones & 1) as u8
        })
        .collect())
}

fn extract_word(masks: &[u64], x: u64) -> usize {
    masks.iter().fold(0, |acc, m| (acc << 1) | ((m & x).count_ones() & 1) as usize)
}

/// Result of an exact leftover-hash evaluation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeftoverReport {
    pub min_entropy: f64,
    pub output_length: usize,
    /// Exp_s D(P_{ext_s(X) E}, U_ℓ × P_E), averaged over every seed.
    pub distance: f64,
    pub epsilon: f64,
}

impl LeftoverReport {
    pub fn holds(&self) -> bool {
        self.distance <= self.epsilon + 1e-12
    }
}

/// Largest seeds × inputs × side-information product enumerated.
pub const LEFTOVER_CAP: usize = 1 << 28;

/// Exact strong-extractor distance of Toeplitz hashing on `source` (rows are
/// n-bit strings x packed big-endian, columns are side-information values)
/// at ℓ = ⌊k_min − 2·log₂(1/ε)⌋.
pub fn leftover_check(source: &JointDistribution, n: usize, k_min: f64, eps: f64) -> Result<LeftoverReport> {
    if n > 10 || source.rows() != 1 << n {
        return Err(Error::InvalidParameter { field: "source", reason: format!("need 2^n rows with n <= 10, got {}", source.rows()) });
    }
    let min_entropy = min_entropy_classical(source);
    if min_entropy + 1e-9 < k_min {
        return Err(Error::InvalidParameter {
            field: "k_min",
            reason: format!("source min-entropy {min_entropy:.4} is below {k_min}"),
        });
    }
    let l = (k_min - 2.0 * (1.0 / eps).log2() + 1e-9).floor().max(0.0) as usize;
    let l = l.min(n);
    let seeds = 1u64 << (n + l).saturating_sub(1);
    let work = (seeds as usize).saturating_mul(source.rows()).saturating_mul(source.cols());
    if work > LEFTOVER_CAP {
        return Err(Error::EnumerationCap(work));
    }
    let p_e = source.marginal_cols();
    let outputs = 1usize << l;
    let mut total = 0.0;
    let mut joint = vec![0.0; outputs * source.cols()];
    for s in 0..seeds {
        let masks = ToeplitzSeed::from_index(n, l, s).row_masks();
        joint.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..source.rows() {
            let k = extract_word(&masks, x as u64);
            for e in 0..source.cols() {
                joint[k * source.cols() + e] += source.get(x, e);
            }
        }
        let mut d = 0.0;
        for k in 0..outputs {
            for e in 0..source.cols() {
                d += (joint[k * source.cols() + e] - p_e.get(e) / outputs as f64).abs();
            }
        }
        total += 0.5 * d;
    }
    Ok(LeftoverReport { min_entropy, output_length: l, distance: total / seeds as f64, epsilon: eps })
}
