use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::otp::NONE;
use crate::ac::resources::{secret_key, KeyVariant};
use crate::ac::{advantage_exact, attach, parallel, Conv, ConvTransition, Converter, Interface, PortSpec, State, Value};
use crate::bits::{random_bits, Bits};
use crate::error::{Error, Result};

/// One consumed slice of the pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub label: String,
    pub start: usize,
    pub len: usize,
}

/// Shared key material consumed front to back; every bit is handed out once.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyPool {
    bits: Bits,
    cursor: usize,
    ledger: Vec<Allocation>,
}

impl KeyPool {
    pub fn new(bits: Bits) -> Self {
        Self { bits, cursor: 0, ledger: Vec::new() }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::new(random_bits(rng, n))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn available(&self) -> usize {
        self.bits.len() - self.cursor
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn ledger(&self) -> &[Allocation] {
        &self.ledger
    }

    /// Appends fresh bits behind the unconsumed ones.
    pub fn extend(&mut self, bits: &[u8]) {
        self.bits.extend_from_slice(bits);
    }

    pub fn take(&mut self, len: usize, label: impl Into<String>) -> Result<Bits> {
        if len > self.available() {
            return Err(Error::PoolExhausted { requested: len, available: self.available() });
        }
        let start = self.cursor;
        self.cursor += len;
        self.ledger.push(Allocation { label: label.into(), start, len });
        Ok(self.bits[start..start + len].to_vec())
    }

    /// Allocations are disjoint, in order and inside the consumed prefix.
    pub fn audit(&self) -> bool {
        let mut end = 0;
        for a in &self.ledger {
            if a.start < end {
                return false;
            }
            end = a.start + a.len;
        }
        end <= self.cursor && self.cursor <= self.bits.len()
    }
}

/// Consumes consecutive keys of the given lengths, all or nothing.
pub fn key_split(pool: &mut KeyPool, lengths: &[usize]) -> Result<Vec<Bits>> {
    let total: usize = lengths.iter().sum();
    if total > pool.available() {
        return Err(Error::PoolExhausted { requested: total, available: pool.available() });
    }
    lengths.iter().enumerate().map(|(i, &l)| pool.take(l, format!("split[{i}]"))).collect()
}

// Serves the high bits of the key on port 0 and the low `b` bits on port 1.
// State: [key (NONE before delivery, NONE − 1 for ⊥), pending ports].
struct Splitter {
    b: usize,
}

impl Splitter {
    fn part(&self, key: u64, port: usize) -> Value {
        if port == 0 {
            Value::Sym(key >> self.b)
        } else {
            Value::Sym(key & ((1u64 << self.b) - 1))
        }
    }
}

impl Converter for Splitter {
    fn inner(&self) -> Vec<String> {
        vec!["key".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::trigger("key"), PortSpec::trigger("key")]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![NONE, 0]))]
    }

    fn on_outer(&self, state: &State, port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v();
        if v[0] == NONE - 1 {
            return Ok(ConvTransition::sure(vec![(port, Value::Bot)], vec![], state.clone()));
        }
        if v[0] != NONE {
            return Ok(ConvTransition::sure(vec![(port, self.part(v[0], port))], vec![], state.clone()));
        }
        let request = if v[1] == 0 { vec![(0, Value::Unit)] } else { vec![] };
        Ok(ConvTransition::sure(vec![], request, State::vals(vec![NONE, v[1] | 1 << port])))
    }

    fn on_inner(&self, state: &State, _port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let pending = state.v()[1];
        let key = input.as_sym();
        let out = (0..2)
            .filter(|p| pending >> p & 1 == 1)
            .map(|p| (p, key.map_or(Value::Bot, |k| self.part(k, p))))
            .collect();
        Ok(ConvTransition::sure(out, vec![], State::vals(vec![key.unwrap_or(NONE - 1), 0])))
    }
}

/// Exact advantage between an (a+b)-bit key split at both ends and two
/// independent keys of a and b bits.
pub fn key_split_audit(a: usize, b: usize) -> Result<f64> {
    let split = |r| -> Result<_> {
        let r = attach(r, Arc::new(Splitter { b }) as Conv, Interface::A)?;
        attach(r, Arc::new(Splitter { b }) as Conv, Interface::B)
    };
    let real = split(secret_key(a + b, KeyVariant::AlwaysDeliver)?)?;
    let ideal = parallel(secret_key(a, KeyVariant::AlwaysDeliver)?, secret_key(b, KeyVariant::AlwaysDeliver)?);
    Ok(advantage_exact(&real, &ideal, 4)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_disjoint_and_reassembles() {
        let bits: Bits = (0..10).map(|i| (i % 3 == 0) as u8).collect();
        let mut pool = KeyPool::new(bits.clone());
        let parts = key_split(&mut pool, &[4, 6]).unwrap();
        assert_eq!(parts[0].len(), 4);
        assert_eq!(parts.concat(), bits);
        assert_eq!(pool.available(), 0);
        assert!(pool.audit());
    }

    #[test]
    fn overdraw_consumes_nothing() {
        let mut pool = KeyPool::new(vec![0; 10]);
        assert!(matches!(key_split(&mut pool, &[4, 7]), Err(Error::PoolExhausted { requested: 11, available: 10 })));
        assert_eq!(pool.available(), 10);
        assert!(pool.ledger().is_empty());
    }

    #[test]
    fn extended_pool_never_reissues_bits() {
        let mut pool = KeyPool::new(vec![1, 1]);
        pool.take(2, "first").unwrap();
        pool.extend(&[0, 0, 0]);
        assert_eq!(pool.take(3, "second").unwrap(), vec![0, 0, 0]);
        assert!(pool.take(1, "third").is_err());
        assert!(pool.audit());
    }

    #[test]
    fn split_construction_is_perfect() {
        assert!(key_split_audit(1, 1).unwrap() < 1e-12);
        assert!(key_split_audit(1, 2).unwrap() < 1e-12);
    }
}
