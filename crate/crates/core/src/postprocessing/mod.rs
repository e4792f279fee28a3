//! Information reconciliation, verification hashing, privacy amplification and
//! the key-length calculator.

mod budget;
mod ir;
mod pa;

pub use budget::{
    asymptotic_rate, hmin_bound, key_length, key_length_raw, sampling_correction, tag_collision_bound, KeyBudget,
};
pub use ir::{ir_decode, ir_encode, syndrome_length, CodingScheme, MAX_BLOCK};
pub use pa::{leftover_check, pa_extract, LeftoverReport, ToeplitzSeed, LEFTOVER_CAP};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{from_u64, Bits};
use crate::error::Result;
use crate::gf::{to_blocks, Gf2m};

/// Key (k1, k2) of the polynomial verification hash over GF(2^v).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSeed {
    pub k1: u64,
    pub k2: u64,
}

impl TagSeed {
    pub fn random<R: Rng + ?Sized>(v: u32, rng: &mut R) -> Result<Self> {
        let f = Gf2m::standard(v)?;
        Ok(Self { k1: rng.random::<u64>() & f.mask(), k2: rng.random::<u64>() & f.mask() })
    }
}

/// v-bit tag Σ x_i k1^i + k2 of the ⌈n/v⌉ blocks of X; v ∈ {4, 8, 32}.
pub fn verify_tag(x: &[u8], v: u32, seed: TagSeed) -> Result<Bits> {
    let f = Gf2m::standard(v)?;
    Ok(from_u64(f.poly_hash(&to_blocks(x, v), seed.k1, seed.k2), v as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_has_v_bits_and_matches_on_equal_input() {
        let x = vec![1, 0, 1, 1, 0, 0, 1, 0, 1];
        let s = TagSeed { k1: 0x3a, k2: 0x91 };
        let t = verify_tag(&x, 8, s).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t, verify_tag(&x.clone(), 8, s).unwrap());
        assert_eq!(verify_tag(&x, 32, TagSeed { k1: 5, k2: 6 }).unwrap().len(), 32);
        assert!(verify_tag(&x, 5, s).is_err());
    }
}
