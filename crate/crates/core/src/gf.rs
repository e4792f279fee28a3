//! Binary extension fields GF(2^m) and the polynomial-evaluation hash family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// GF(2^m) with elements as the low `m` bits of a `u64`; `modulus` includes the
/// leading x^m term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gf2m {
    m: u32,
    modulus: u64,
}

/// x⁴ + x + 1.
pub const GF16: Gf2m = Gf2m { m: 4, modulus: 0x13 };
/// x⁸ + x⁴ + x³ + x + 1.
pub const GF256: Gf2m = Gf2m { m: 8, modulus: 0x11B };
/// x³² + x⁷ + x³ + x² + 1.
pub const GF2_32: Gf2m = Gf2m { m: 32, modulus: 0x1_0000_008D };

impl Gf2m {
    /// Field with the given modulus; rejects reducible polynomials.
    pub fn new(m: u32, modulus: u64) -> Result<Self> {
        if !(1..=32).contains(&m) || modulus >> m != 1 {
            return Err(Error::InvalidParameter { field: "modulus", reason: format!("not a degree-{m} polynomial") });
        }
        if !is_irreducible(modulus) {
            return Err(Error::InvalidParameter { field: "modulus", reason: format!("{modulus:#x} is reducible") });
        }
        Ok(Self { m, modulus })
    }

    /// The built-in field for m ∈ {4, 8, 32}.
    pub fn standard(m: u32) -> Result<Self> {
        match m {
            4 => Ok(GF16),
            8 => Ok(GF256),
            32 => Ok(GF2_32),
            _ => Err(Error::InvalidParameter { field: "m", reason: format!("no built-in field for m = {m}") }),
        }
    }

    pub fn bits(&self) -> u32 {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        1 << self.m
    }

    pub fn mask(&self) -> u64 {
        self.order() - 1
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        poly_mod(clmul(a, b), self.modulus as u128) as u64
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Σ_{i=1}^{μ} x_i k1^i + k2 for blocks x_1..x_μ.
    pub fn poly_hash(&self, blocks: &[u64], k1: u64, k2: u64) -> u64 {
        let acc = blocks.iter().rev().fold(0, |acc, &x| self.mul(acc ^ x, k1));
        acc ^ k2
    }
}

fn clmul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    for i in 0..64 {
        if (b >> i) & 1 == 1 {
            acc ^= (a as u128) << i;
        }
    }
    acc
}

fn degree(p: u128) -> i32 {
    127 - p.leading_zeros() as i32
}

fn poly_mod(mut a: u128, m: u128) -> u128 {
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_mod(a, b);
        a = b;
        b = r;
    }
    a
}

/// x^(2^k) mod f.
fn frobenius_x(k: u32, f: u128) -> u128 {
    let mut r = poly_mod(2, f);
    for _ in 0..k {
        r = poly_mod(clmul(r as u64, r as u64), f);
    }
    r
}

/// Rabin's irreducibility test over GF(2).
pub fn is_irreducible(f: u64) -> bool {
    let n = degree(f as u128);
    if n < 1 {
        return false;
    }
    let f = f as u128;
    if frobenius_x(n as u32, f) != poly_mod(2, f) {
        return false;
    }
    let primes = (2..=n).filter(|&p| n % p == 0 && (2..p).all(|d| p % d != 0));
    for q in primes {
        let h = frobenius_x((n / q) as u32, f) ^ poly_mod(2, f);
        if poly_gcd(f, h) != 1 {
            return false;
        }
    }
    true
}

/// Splits `bits` into ⌈len/m⌉ blocks of m bits, zero-padding the last one.
pub fn to_blocks(bits: &[u8], m: u32) -> Vec<u64> {
    bits.chunks(m as usize)
        .map(|c| {
            let v = crate::bits::to_u64(c);
            v << (m as usize - c.len())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_moduli_are_irreducible() {
        for f in [GF16, GF256, GF2_32] {
            assert!(is_irreducible(f.modulus()), "{:#x}", f.modulus());
        }
        // x⁴ + 1 = (x + 1)⁴.
        assert!(!is_irreducible(0x11));
        assert!(Gf2m::new(4, 0x11).is_err());
    }

    #[test]
    fn every_nonzero_element_has_inverse() {
        for a in 1..16 {
            assert_eq!(GF16.mul(a, GF16.pow(a, 14)), 1);
        }
        for a in 1..256 {
            assert_eq!(GF256.mul(a, GF256.pow(a, 254)), 1);
        }
    }

    #[test]
    fn aes_field_example() {
        // Standard worked example: 0x57 · 0x83 = 0xC1.
        assert_eq!(GF256.mul(0x57, 0x83), 0xC1);
    }

    #[test]
    fn hash_is_polynomial_evaluation() {
        let (k1, k2) = (7, 3);
        let blocks = [5, 9];
        let direct = GF16.mul(5, k1) ^ GF16.mul(9, GF16.mul(k1, k1)) ^ k2;
        assert_eq!(GF16.poly_hash(&blocks, k1, k2), direct);
    }

    #[test]
    fn blocks_pad_last_chunk() {
        assert_eq!(to_blocks(&[1, 0, 1, 1, 1], 4), vec![0b1011, 0b1000]);
    }
}
