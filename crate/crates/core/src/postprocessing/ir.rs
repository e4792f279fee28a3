use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::{from_u64, to_u64};
use crate::error::{Error, Result};

/// Largest block the exhaustive decoder accepts.
pub const MAX_BLOCK: usize = 24;

/// One-way syndrome coding: enc(X) = H·X over GF(2) for a k×n parity matrix H,
/// decoded by the lowest-weight error pattern consistent with the syndrome
/// difference.
#[derive(Clone, Debug)]
pub struct CodingScheme {
    n: usize,
    rows: Vec<u32>,
    max_weight: usize,
    eta_design: f64,
    eps_ec: f64,
    leaders: HashMap<u32, u32>,
}

impl CodingScheme {
    fn build(n: usize, rows: Vec<u32>, max_weight: usize) -> Result<Self> {
        if n == 0 || n > MAX_BLOCK {
            return Err(Error::InvalidParameter { field: "n", reason: format!("block length {n} not in 1..={MAX_BLOCK}") });
        }
        let mut scheme = Self { n, rows, max_weight: max_weight.min(n), eta_design: 0.0, eps_ec: 1.0, leaders: HashMap::new() };
        scheme.leaders = scheme.coset_leaders();
        Ok(scheme)
    }

    /// Random k×n parity matrix derived from `seed`.
    pub fn random(n: usize, k: usize, seed: u64, max_weight: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = if n >= 32 { u32::MAX } else { (1u32 << n) - 1 };
        let rows = (0..k).map(|_| rng.random::<u32>() & mask).collect();
        Self::build(n, rows, max_weight)
    }

    /// k all-zero rows: every syndrome is 0.
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        Self::build(n, vec![0; k], 0)
    }

    /// k = n identity rows: the syndrome is X itself.
    pub fn identity(n: usize) -> Result<Self> {
        let rows = (0..n).map(|i| 1u32 << (n - 1 - i)).collect();
        Self::build(n, rows, n)
    }

    /// Attaches the declared design error rate and failure probability.
    pub fn with_design(mut self, eta_design: f64, eps_ec: f64) -> Self {
        self.eta_design = eta_design;
        self.eps_ec = eps_ec;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Syndrome length k.
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    pub fn eta_design(&self) -> f64 {
        self.eta_design
    }

    pub fn eps_ec(&self) -> f64 {
        self.eps_ec
    }

    fn syndrome_word(&self, x: u32) -> u32 {
        self.rows.iter().fold(0, |acc, r| (acc << 1) | ((r & x).count_ones() & 1))
    }

    /// First pattern found for each syndrome, enumerating by increasing weight.
    fn coset_leaders(&self) -> HashMap<u32, u32> {
        let mut leaders = HashMap::new();
        for w in 0..=self.max_weight {
            for_each_pattern(self.n, w, &mut |e| {
                leaders.entry(self.syndrome_word(e)).or_insert(e);
            });
        }
        leaders
    }

    pub fn encode_word(&self, x: u32) -> u32 {
        self.syndrome_word(x)
    }

    pub fn decode_word(&self, c: u32, y: u32) -> Result<u32> {
        let diff = c ^ self.syndrome_word(y);
        self.leaders
            .get(&diff)
            .map(|e| y ^ e)
            .ok_or(Error::DecodeFailure { max_weight: self.max_weight })
    }
}

/// Calls `f` on every n-bit word of Hamming weight `w` in increasing numeric order.
fn for_each_pattern(n: usize, w: usize, f: &mut impl FnMut(u32)) {
    fn rec(start: usize, n: usize, left: usize, acc: u32, f: &mut impl FnMut(u32)) {
        if left == 0 {
            f(acc);
            return;
        }
        for i in start..=n - left {
            rec(i + 1, n, left - 1, acc | (1 << i), f);
        }
    }
    if w <= n {
        rec(0, n, w, 0, f);
    }
}

/// Syndrome C = enc(X).
pub fn ir_encode(x: &[u8], scheme: &CodingScheme) -> Result<Vec<u8>> {
    if x.len() != scheme.n {
        return Err(Error::LengthMismatch { expected: scheme.n, got: x.len() });
    }
    Ok(from_u64(scheme.encode_word(to_u64(x) as u32) as u64, scheme.k()))
}

/// X̂ = dec(C, Y).
pub fn ir_decode(c: &[u8], y: &[u8], scheme: &CodingScheme) -> Result<Vec<u8>> {
    if y.len() != scheme.n {
        return Err(Error::LengthMismatch { expected: scheme.n, got: y.len() });
    }
    if c.len() != scheme.k() {
        return Err(Error::LengthMismatch { expected: scheme.k(), got: c.len() });
    }
    let x = scheme.decode_word(to_u64(c) as u32, to_u64(y) as u32)?;
    Ok(from_u64(x as u64, scheme.n))
}

/// Syndrome length ⌈n·h(η)⌉ + ⌈4·log₂(1/ε_EC)⌉, capped at n.
pub fn syndrome_length(n: usize, eta: f64, eps_ec: f64) -> usize {
    let k = (n as f64 * crate::metrics::h(eta)).ceil() + (4.0 * (1.0 / eps_ec).log2()).ceil();
    (k.max(0.0) as usize).min(n)
}
