//! Bit strings stored one bit per byte (each entry is 0 or 1).

use rand::Rng;

use crate::error::{Error, Result};

pub type Bits = Vec<u8>;

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Bits {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

pub fn xor(a: &[u8], b: &[u8]) -> Result<Bits> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

pub fn weight(a: &[u8]) -> usize {
    a.iter().filter(|&&b| b != 0).count()
}

/// Big-endian packing: `bits[0]` becomes the most significant bit.
pub fn to_u64(bits: &[u8]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as u64)
}

pub fn from_u64(value: u64, n: usize) -> Bits {
    (0..n).map(|i| ((value >> (n - 1 - i)) & 1) as u8).collect()
}

/// Hex encoding, zero-padded on the right to whole nibbles.
pub fn to_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|c| {
            let v = c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (3 - i)));
            char::from_digit(v as u32, 16).unwrap()
        })
        .collect()
}

pub fn from_hex(hex: &str, n: usize) -> Result<Bits> {
    let mut out = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let v = c.to_digit(16).ok_or_else(|| Error::InvalidParameter {
            field: "hex",
            reason: format!("invalid digit {c:?}"),
        })?;
        out.extend((0..4).map(|i| ((v >> (3 - i)) & 1) as u8));
    }
    if out.len() < n {
        return Err(Error::LengthMismatch { expected: n, got: out.len() });
    }
    out.truncate(n);
    Ok(out)
}
