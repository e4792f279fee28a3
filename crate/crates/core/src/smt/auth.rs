use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::otp::{sym, NONE};
use crate::ac::resources::{authentic_channel, insecure_channel, secret_key, ChannelVariant, InsecureKind, KeyVariant};
use crate::ac::simulators::auth_simulator;
use crate::ac::{advantage_exact, attach, parallel, Conv, ConvTransition, Converter, Interface, PortSpec, Res, State, Value};
use crate::bits::{from_u64, to_u64};
use crate::error::{Error, Result};
use crate::gf::{to_blocks, Gf2m};

/// Key (k₁, k₂) of the polynomial hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthKey {
    pub k1: u64,
    pub k2: u64,
}

impl AuthKey {
    /// First m bits are k₁, the next m bits k₂.
    pub fn from_bits(bits: &[u8], m: u32) -> Result<Self> {
        let m = m as usize;
        if bits.len() != 2 * m {
            return Err(Error::LengthMismatch { expected: 2 * m, got: bits.len() });
        }
        Ok(Self { k1: to_u64(&bits[..m]), k2: to_u64(&bits[m..]) })
    }

    fn from_word(k: u64, m: u32) -> Self {
        Self { k1: k >> m, k2: k & ((1u64 << m) - 1) }
    }
}

/// h_{k₁,k₂}(x) = Σ x_i k₁^i + k₂ over GF(2^m) for messages of μ blocks.
#[derive(Clone, Debug)]
pub struct AsuHashFamily {
    field: Gf2m,
    blocks: usize,
}

impl AsuHashFamily {
    pub fn new(m: u32, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::InvalidParameter { field: "blocks", reason: "must be positive".into() });
        }
        Ok(Self { field: Gf2m::standard(m)?, blocks })
    }

    /// Family for messages of `len` bits.
    pub fn for_length(m: u32, len: usize) -> Result<Self> {
        Self::new(m, len.div_ceil(m as usize).max(1))
    }

    pub fn tag_bits(&self) -> u32 {
        self.field.bits()
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn message_bits(&self) -> usize {
        self.blocks * self.field.bits() as usize
    }

    pub fn key_bits(&self) -> usize {
        2 * self.field.bits() as usize
    }

    /// μ/2^m.
    pub fn epsilon(&self) -> f64 {
        self.blocks as f64 / self.field.order() as f64
    }

    /// Hash of a message packed into a word, most significant block first.
    pub fn hash_word(&self, x: u64, key: AuthKey) -> u64 {
        let m = self.field.bits();
        let blocks: Vec<u64> = (0..self.blocks).map(|i| (x >> (m as usize * (self.blocks - 1 - i))) & self.field.mask()).collect();
        self.field.poly_hash(&blocks, key.k1, key.k2)
    }

    pub fn hash(&self, x: &[u8], key: AuthKey) -> Result<u64> {
        let blocks = to_blocks(x, self.field.bits());
        if blocks.len() > self.blocks {
            return Err(Error::LengthMismatch { expected: self.message_bits(), got: x.len() });
        }
        let mut padded = blocks;
        padded.resize(self.blocks, 0);
        Ok(self.field.poly_hash(&padded, key.k1, key.k2))
    }
}

/// Tag of `x` as an m-bit string.
pub fn wc_tag(family: &AsuHashFamily, x: &[u8], key: AuthKey) -> Result<Vec<u8>> {
    Ok(from_u64(family.hash(x, key)?, family.tag_bits() as usize))
}

/// Some(x′) when the tag matches, None (⊥) otherwise.
pub fn wc_verify(family: &AsuHashFamily, x: &[u8], tag: &[u8], key: AuthKey) -> Result<Option<Vec<u8>>> {
    if tag.len() != family.tag_bits() as usize {
        return Ok(None);
    }
    Ok((family.hash(x, key)? == to_u64(tag)).then(|| x.to_vec()))
}

/// Largest message space enumerated by [`AsuHashFamily::audit`].
pub const MAX_ASU_MESSAGE_BITS: usize = 10;

/// Worst-case probabilities over all message and tag choices, exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsuReport {
    /// max over x₁≠x₂, y₁, y₂ of Pr_k[h(x₁)=y₁ ∧ h(x₂)=y₂].
    pub max_pair: f64,
    /// max over (x, y) of Pr_k[h(x)=y].
    pub impersonation: f64,
    /// max over x, y, x′≠x, y′ of Pr_k[h(x′)=y′ | h(x)=y].
    pub substitution: f64,
}

impl AsuHashFamily {
    /// Enumerates every key for every pair of messages.
    pub fn audit(&self) -> Result<AsuReport> {
        let mbits = self.message_bits();
        if mbits > MAX_ASU_MESSAGE_BITS {
            return Err(Error::UnsupportedSize(format!("{mbits}-bit messages")));
        }
        let m = self.tag_bits();
        let keys = 1u64 << (2 * m);
        let tags = 1usize << m;
        let table: Vec<Vec<u64>> =
            (0..1u64 << mbits).map(|x| (0..keys).map(|k| self.hash_word(x, AuthKey::from_word(k, m))).collect()).collect();
        let mut single = vec![0u64; tags];
        let mut impersonation = 0u64;
        for row in &table {
            single.iter_mut().for_each(|c| *c = 0);
            row.iter().for_each(|&t| single[t as usize] += 1);
            impersonation = impersonation.max(*single.iter().max().unwrap_or(&0));
        }
        let mut max_pair = 0u64;
        let mut substitution = 0.0f64;
        let mut counts = vec![0u64; tags * tags];
        for (x1, r1) in table.iter().enumerate() {
            single.iter_mut().for_each(|c| *c = 0);
            r1.iter().for_each(|&t| single[t as usize] += 1);
            for (x2, r2) in table.iter().enumerate() {
                if x1 == x2 {
                    continue;
                }
                counts.iter_mut().for_each(|c| *c = 0);
                for (&a, &b) in r1.iter().zip(r2) {
                    counts[a as usize * tags + b as usize] += 1;
                }
                for (i, &c) in counts.iter().enumerate() {
                    max_pair = max_pair.max(c);
                    let given = single[i / tags];
                    if given > 0 {
                        substitution = substitution.max(c as f64 / given as f64);
                    }
                }
            }
        }
        Ok(AsuReport {
            max_pair: max_pair as f64 / keys as f64,
            impersonation: impersonation as f64 / keys as f64,
            substitution,
        })
    }
}

// State: [message or NONE].
struct AuthSender {
    family: AsuHashFamily,
    messages: Vec<u64>,
}

impl Converter for AuthSender {
    fn inner(&self) -> Vec<String> {
        vec!["key".into(), "in".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::new("in", self.messages.iter().map(|&x| Value::Sym(x)).collect())]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![NONE]))]
    }

    fn on_outer(&self, state: &State, _port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        if state.v()[0] != NONE {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        let x = sym(input, "in")?;
        Ok(ConvTransition::sure(vec![], vec![(0, Value::Unit)], State::vals(vec![x])))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let x = state.v()[0];
        match (port, input) {
            (0, Value::Sym(k)) if x != NONE => {
                let m = self.family.tag_bits();
                let c = x << m | self.family.hash_word(x, AuthKey::from_word(*k, m));
                Ok(ConvTransition::sure(vec![], vec![(1, Value::Sym(c))], state.clone()))
            }
            _ => Ok(ConvTransition::sure(vec![], vec![], state.clone())),
        }
    }
}

// State: [received x′‖y′ or NONE].
struct AuthReceiver {
    family: AsuHashFamily,
}

impl Converter for AuthReceiver {
    fn inner(&self) -> Vec<String> {
        vec!["key".into(), "out".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("out")]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![NONE]))]
    }

    fn on_outer(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let c = state.v()[0];
        match port {
            1 if c == NONE => {
                let c = sym(input, "out")?;
                Ok(ConvTransition::sure(vec![], vec![(0, Value::Unit)], State::vals(vec![c])))
            }
            0 if c != NONE => {
                let m = self.family.tag_bits();
                let (x, y) = (c >> m, c & ((1u64 << m) - 1));
                let out = match input {
                    Value::Sym(k) if self.family.hash_word(x, AuthKey::from_word(*k, m)) == y => Value::Sym(x),
                    _ => Value::Bot,
                };
                Ok(ConvTransition::sure(vec![(0, out)], vec![], state.clone()))
            }
            _ => Ok(ConvTransition::sure(vec![], vec![], state.clone())),
        }
    }
}

// State: [x or NONE, tag y, switch A, switch B, shown, injected c or NONE, resolved].
struct TwoSwitchAuthSim {
    tag_bits: u32,
    inject: Vec<Value>,
}

const UNSET: u64 = 2;

impl TwoSwitchAuthSim {
    fn show(&self, v: &[u64]) -> Vec<ConvTransition> {
        let n = 1u64 << self.tag_bits;
        (0..n)
            .map(|y| {
                let mut next = v.to_vec();
                next[1] = y;
                next[4] = 1;
                let (out, inner) = self.resolve(&mut next);
                let mut to_outer = vec![(2, Value::Sym(v[0] << self.tag_bits | y))];
                to_outer.extend(out);
                ConvTransition::new(1.0 / n as f64, to_outer, inner, State::vals(next))
            })
            .collect()
    }

    // Bob's verdict once both the injected string and his key switch are known.
    fn resolve(&self, v: &mut [u64]) -> (Vec<(usize, Value)>, Vec<(usize, Value)>) {
        if v[6] == 1 || v[5] == NONE || v[3] == UNSET {
            return (vec![], vec![]);
        }
        v[6] = 1;
        let accept = v[3] == 1 && v[4] == 1 && v[5] == (v[0] << self.tag_bits | v[1]);
        (vec![], vec![(1, Value::Sym(accept as u64))])
    }

    fn sure(&self, mut next: Vec<u64>) -> Vec<ConvTransition> {
        let (out, inner) = self.resolve(&mut next);
        ConvTransition::sure(out, inner, State::vals(next))
    }
}

impl Converter for TwoSwitchAuthSim {
    fn inner(&self) -> Vec<String> {
        vec!["read".into(), "switch".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![
            PortSpec::symbols("switch_a", 2),
            PortSpec::symbols("switch_b", 2),
            PortSpec::output("read"),
            PortSpec::new("inject", self.inject.clone()),
        ]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![NONE, 0, UNSET, UNSET, 0, NONE, 0]))]
    }

    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v().to_vec();
        let mut next = v.clone();
        match port {
            0 if v[2] == UNSET => {
                next[2] = sym(input, "switch_a")?.min(1);
                if next[2] == 1 && v[0] != NONE {
                    return Ok(self.show(&next));
                }
            }
            1 if v[3] == UNSET => next[3] = sym(input, "switch_b")?.min(1),
            3 if v[5] == NONE => next[5] = sym(input, "inject")?,
            _ => {}
        }
        Ok(self.sure(next))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v();
        if port != 0 || v[0] != NONE {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        let mut next = v.to_vec();
        next[0] = sym(input, "read")?;
        if next[2] == 1 {
            return Ok(self.show(&next));
        }
        Ok(ConvTransition::sure(vec![], vec![], State::vals(next)))
    }
}

/// Result of an exact construction audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthAudit {
    pub advantage: f64,
    /// μ/2^m.
    pub bound: f64,
    pub nodes: usize,
}

impl AuthAudit {
    pub fn holds(&self) -> bool {
        self.advantage <= self.bound + 1e-12
    }
}

/// Real system π_A π_B (K ∥ C): Alice sends x‖h_k(x) over an insecure channel
/// on which Eve may inject any value of `inject`; Bob outputs x′ or ⊥.
pub fn auth_real(family: &AsuHashFamily, messages: &[u64], inject: &[u64], key: KeyVariant) -> Result<Res> {
    let m = family.tag_bits();
    let alphabet: Vec<u64> = messages.iter().flat_map(|&x| (0..1u64 << m).map(move |y| x << m | y)).collect();
    let channel = insecure_channel(InsecureKind::Classical { alphabet, inject: inject.to_vec() })?;
    let r = parallel(secret_key(family.key_bits(), key)?, channel);
    let sender: Conv = Arc::new(AuthSender { family: family.clone(), messages: messages.to_vec() });
    let r = attach(r, sender, Interface::A)?;
    attach(r, Arc::new(AuthReceiver { family: family.clone() }) as Conv, Interface::B)
}

/// Authentic channel with a deliver/block switch and the matching simulator.
pub fn auth_ideal(family: &AsuHashFamily, messages: &[u64], inject: &[u64], key: &KeyVariant) -> Result<Res> {
    let channel = authentic_channel(messages, ChannelVariant::Switch);
    let m = family.tag_bits();
    let sim = match key {
        KeyVariant::AlwaysDeliver => auth_simulator(m, inject)?,
        KeyVariant::TwoSwitch => {
            Arc::new(TwoSwitchAuthSim { tag_bits: m, inject: inject.iter().map(|&c| Value::Sym(c)).collect() }) as Conv
        }
        other => return Err(Error::InvalidParameter { field: "key", reason: format!("{other:?} has no simulator") }),
    };
    attach(channel, sim, Interface::E)
}

/// Exact advantage between [`auth_real`] and [`auth_ideal`] for distinguishers
/// with `depth` inputs.
pub fn auth_channel_construct(
    family: &AsuHashFamily,
    messages: &[u64],
    inject: &[u64],
    key: KeyVariant,
    depth: usize,
) -> Result<AuthAudit> {
    let ideal = auth_ideal(family, messages, inject, &key)?;
    let real = auth_real(family, messages, inject, key)?;
    let report = advantage_exact(&real, &ideal, depth)?;
    Ok(AuthAudit { advantage: report.value, bound: family.epsilon(), nodes: report.nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untampered_message_verifies() {
        let f = AsuHashFamily::for_length(4, 8).unwrap();
        let key = AuthKey { k1: 7, k2: 3 };
        let x = vec![1, 0, 1, 1, 0, 0, 1, 0];
        let tag = wc_tag(&f, &x, key).unwrap();
        assert_eq!(wc_verify(&f, &x, &tag, key).unwrap(), Some(x.clone()));
        let mut forged = x.clone();
        forged[0] ^= 1;
        let accepted = wc_verify(&f, &forged, &tag, key).unwrap();
        assert!(accepted.is_none() || f.hash(&forged, key).unwrap() == f.hash(&x, key).unwrap());
    }

    #[test]
    fn word_and_bit_hashes_agree() {
        let f = AsuHashFamily::new(4, 2).unwrap();
        for x in [0u64, 1, 0x5a, 0xff] {
            let key = AuthKey { k1: 9, k2: 4 };
            assert_eq!(f.hash_word(x, key), f.hash(&from_u64(x, 8), key).unwrap());
        }
    }

    #[test]
    fn key_bits_split_in_halves() {
        let k = AuthKey::from_bits(&[1, 0, 0, 1, 0, 1, 1, 0], 4).unwrap();
        assert_eq!(k, AuthKey { k1: 9, k2: 6 });
        assert!(AuthKey::from_bits(&[1, 0], 4).is_err());
    }

    #[test]
    fn single_block_family_is_strongly_universal() {
        let r = AsuHashFamily::new(4, 1).unwrap().audit().unwrap();
        assert!((r.max_pair - 1.0 / 256.0).abs() < 1e-12);
        assert!((r.impersonation - 1.0 / 16.0).abs() < 1e-12);
        assert!((r.substitution - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn without_injection_nothing_is_delivered() {
        let f = AsuHashFamily::new(4, 1).unwrap();
        let a = auth_channel_construct(&f, &[3], &[], KeyVariant::AlwaysDeliver, 2).unwrap();
        assert!(a.advantage < 1e-12);
    }

    #[test]
    fn unsupported_key_variant_rejected() {
        let f = AsuHashFamily::new(4, 1).unwrap();
        assert!(auth_ideal(&f, &[0], &[], &KeyVariant::EveSwitch).is_err());
    }
}
