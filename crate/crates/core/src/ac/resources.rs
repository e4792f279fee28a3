//! Ideal and real resources: keys, channels and their switch variants.

use std::sync::Arc;

use super::{Interface, Port, PortSpec, Res, Resource, Schema, State, Transition, Value};
use crate::error::{Error, Result};
use crate::quantum::{depolarize, DensityOperator};

const UNSET: u64 = 0;
const BLOCK: u64 = 1;
const DELIVER: u64 = 2;

/// Largest key enumerated explicitly.
pub const MAX_KEY_BITS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub enum KeyVariant {
    /// Both parties always receive the key.
    AlwaysDeliver,
    /// Eve decides once whether both parties get the key or ⊥.
    EveSwitch,
    /// ⊥ for both with probability δ, otherwise the key.
    Probabilistic { delta: f64 },
    /// Eve decides separately for Alice and Bob.
    TwoSwitch,
    /// Eve picks one of the allowed lengths, or ⊥.
    AdaptiveLength { lengths: Vec<usize> },
}

struct SecretKey {
    bits: usize,
    variant: KeyVariant,
}

impl SecretKey {
    fn key_states(&self, weight: f64, sa: u64, sb: u64) -> Vec<(f64, State)> {
        let n = 1u64 << self.bits;
        (0..n).map(|k| (weight / n as f64, State::vals(vec![k, sa, sb, 0, 0]))).collect()
    }

    fn deliver(&self, key: u64, sw: u64) -> Value {
        match sw {
            BLOCK => Value::Bot,
            _ => match &self.variant {
                KeyVariant::AdaptiveLength { lengths } => {
                    let l = lengths[(sw - DELIVER) as usize];
                    Value::Sym(key & ((1u64 << l) - 1))
                }
                _ => Value::Sym(key),
            },
        }
    }
}

impl Resource for SecretKey {
    fn schema(&self) -> Schema {
        let e = match &self.variant {
            KeyVariant::AlwaysDeliver | KeyVariant::Probabilistic { .. } => vec![],
            KeyVariant::EveSwitch => vec![PortSpec::symbols("switch", 2)],
            KeyVariant::TwoSwitch => vec![PortSpec::symbols("switch_a", 2), PortSpec::symbols("switch_b", 2)],
            KeyVariant::AdaptiveLength { lengths } => vec![PortSpec::symbols("length", lengths.len() as u64 + 1)],
        };
        Schema::new(vec![PortSpec::trigger("key")], vec![PortSpec::trigger("key")], e)
    }

    fn init(&self) -> Vec<(f64, State)> {
        match &self.variant {
            KeyVariant::AlwaysDeliver => self.key_states(1.0, DELIVER, DELIVER),
            KeyVariant::Probabilistic { delta } => {
                let mut v = self.key_states(1.0 - delta, DELIVER, DELIVER);
                if *delta > 0.0 {
                    v.push((*delta, State::vals(vec![0, BLOCK, BLOCK, 0, 0])));
                }
                v
            }
            _ => self.key_states(1.0, UNSET, UNSET),
        }
    }

    // State: [key, switch A, switch B, A waiting, B waiting]. Requests made
    // before the switch is set are answered when it is.
    fn step(&self, state: &State, port: Port, input: &Value) -> Result<Vec<Transition>> {
        let v = state.v();
        let (key, sa, sb, wa, wb) = (v[0], v[1], v[2], v[3], v[4]);
        match port.iface {
            Interface::A | Interface::B => {
                let a = port.iface == Interface::A;
                let sw = if a { sa } else { sb };
                if sw == UNSET {
                    let next = if a { vec![key, sa, sb, 1, wb] } else { vec![key, sa, sb, wa, 1] };
                    return Ok(Transition::sure(vec![], State::vals(next)));
                }
                Ok(Transition::sure(vec![(port, self.deliver(key, sw))], state.clone()))
            }
            Interface::E => {
                let x = input.as_sym().ok_or_else(|| Error::SchemaMismatch("switch expects a symbol".into()))?;
                let set = |cur: u64| if cur != UNSET { cur } else if x == 0 { BLOCK } else { DELIVER + x - 1 };
                let (na, nb) = match (&self.variant, port.index) {
                    (KeyVariant::TwoSwitch, 0) => (set(sa), sb),
                    (KeyVariant::TwoSwitch, _) => (sa, set(sb)),
                    _ => (set(sa), set(sb)),
                };
                let mut out = Vec::new();
                let (mut na_wait, mut nb_wait) = (wa, wb);
                if wa == 1 && sa == UNSET && na != UNSET {
                    out.push((Port::new(Interface::A, 0), self.deliver(key, na)));
                    na_wait = 0;
                }
                if wb == 1 && sb == UNSET && nb != UNSET {
                    out.push((Port::new(Interface::B, 0), self.deliver(key, nb)));
                    nb_wait = 0;
                }
                Ok(Transition::sure(out, State::vals(vec![key, na, nb, na_wait, nb_wait])))
            }
        }
    }
}

/// Uniform `bits`-bit key delivered on request at A and B.
pub fn secret_key(bits: usize, variant: KeyVariant) -> Result<Res> {
    if bits > MAX_KEY_BITS {
        return Err(Error::UnsupportedSize(format!("{bits}-bit key exceeds {MAX_KEY_BITS}")));
    }
    match &variant {
        KeyVariant::Probabilistic { delta } if !(0.0..=1.0).contains(delta) => {
            return Err(Error::ProbabilityOutOfRange(*delta));
        }
        KeyVariant::AdaptiveLength { lengths } if lengths.iter().any(|&l| l > bits) || lengths.is_empty() => {
            return Err(Error::InvalidParameter { field: "lengths", reason: format!("{lengths:?} vs {bits} bits") });
        }
        _ => {}
    }
    Ok(Arc::new(SecretKey { bits, variant }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelVariant {
    /// Bob always receives Alice's message.
    Idealized,
    /// Eve decides once whether Bob receives the message or ⊥.
    Switch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Leak {
    Content,
    Length,
}

/// Alice → Bob channel where Eve can read (or learn the size of) the message
/// but not change it.
struct GuardedChannel {
    alphabet: Vec<Value>,
    variant: ChannelVariant,
    leak: Leak,
    length: u64,
}

impl GuardedChannel {
    fn leaked(&self, v: &Value) -> Value {
        match (self.leak, v) {
            (Leak::Content, _) => v.clone(),
            (Leak::Length, Value::Quantum(rho)) => Value::Sym(rho.qubits() as u64),
            (Leak::Length, _) => Value::Sym(self.length),
        }
    }
}

fn index_of(alphabet: &[Value], v: &Value) -> Result<u64> {
    alphabet
        .iter()
        .position(|a| a == v)
        .map(|i| i as u64)
        .ok_or_else(|| Error::SchemaMismatch(format!("value {v} not in the port alphabet")))
}

// State: [sent, message index, resolved].
impl Resource for GuardedChannel {
    fn schema(&self) -> Schema {
        let read = if self.leak == Leak::Content { "read" } else { "leak" };
        let mut e = vec![PortSpec::output(read)];
        if self.variant == ChannelVariant::Switch {
            e.push(PortSpec::symbols("switch", 2));
        }
        Schema::new(vec![PortSpec::new("in", self.alphabet.clone())], vec![PortSpec::output("out")], e)
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![0, 0, 0]))]
    }

    fn step(&self, state: &State, port: Port, input: &Value) -> Result<Vec<Transition>> {
        let v = state.v();
        let (sent, msg, resolved) = (v[0], v[1], v[2]);
        let same = || Ok(Transition::sure(vec![], state.clone()));
        let bob = Port::new(Interface::B, 0);
        let eve = Port::new(Interface::E, 0);
        match (port.iface, port.index) {
            (Interface::A, 0) => {
                if sent == 1 {
                    return same();
                }
                let idx = index_of(&self.alphabet, input)?;
                let mut out = vec![(eve, self.leaked(input))];
                let mut now_resolved = resolved;
                if self.variant == ChannelVariant::Idealized && resolved == 0 {
                    out.insert(0, (bob, input.clone()));
                    now_resolved = 1;
                }
                Ok(Transition::sure(out, State::vals(vec![1, idx, now_resolved])))
            }
            (Interface::E, 1) => {
                if resolved == 1 {
                    return same();
                }
                match input.as_sym() {
                    Some(0) => Ok(Transition::sure(vec![(bob, Value::Bot)], State::vals(vec![sent, msg, 1]))),
                    _ if sent == 0 => same(),
                    _ => Ok(Transition::sure(
                        vec![(bob, self.alphabet[msg as usize].clone())],
                        State::vals(vec![sent, msg, 1]),
                    )),
                }
            }
            _ => same(),
        }
    }
}

fn symbols(alphabet: &[u64]) -> Vec<Value> {
    alphabet.iter().map(|&x| Value::Sym(x)).collect()
}

/// Authentic channel for the messages in `alphabet`; Eve reads every message.
pub fn authentic_channel(alphabet: &[u64], variant: ChannelVariant) -> Res {
    Arc::new(GuardedChannel { alphabet: symbols(alphabet), variant, leak: Leak::Content, length: 0 })
}

/// Secure channel for `bits`-bit messages: Eve learns only the length.
pub fn secure_channel(bits: usize, alphabet: &[u64], variant: ChannelVariant) -> Res {
    Arc::new(GuardedChannel { alphabet: symbols(alphabet), variant, leak: Leak::Length, length: bits as u64 })
}

/// Secure quantum channel: Eve learns only the number of qubits.
pub fn secure_quantum_channel(alphabet: Vec<DensityOperator>, variant: ChannelVariant) -> Res {
    Arc::new(GuardedChannel { alphabet: alphabet.into_iter().map(Value::Quantum).collect(), variant, leak: Leak::Length, length: 0 })
}

#[derive(Clone, Debug)]
pub enum InsecureKind {
    /// Classical messages; Eve reads and may inject any value of `inject`.
    Classical { alphabet: Vec<u64>, inject: Vec<u64> },
    /// Quantum messages; Eve holds the sent state and may inject any listed state.
    Quantum { alphabet: Vec<DensityOperator>, inject: Vec<DensityOperator> },
    /// Honest noisy quantum channel: each qubit depolarized with probability q;
    /// Eve has no access.
    Noisy { alphabet: Vec<DensityOperator>, q: f64 },
}

struct Insecure {
    alphabet: Vec<Value>,
    inject: Vec<Value>,
    noise: Option<f64>,
}

// State: [sent, message index, delivered].
impl Resource for Insecure {
    fn schema(&self) -> Schema {
        let e = if self.noise.is_some() {
            vec![]
        } else {
            vec![PortSpec::output("read"), PortSpec::new("inject", self.inject.clone())]
        };
        Schema::new(vec![PortSpec::new("in", self.alphabet.clone())], vec![PortSpec::output("out")], e)
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![0, 0, 0]))]
    }

    fn step(&self, state: &State, port: Port, input: &Value) -> Result<Vec<Transition>> {
        let v = state.v();
        let (sent, msg, delivered) = (v[0], v[1], v[2]);
        let same = || Ok(Transition::sure(vec![], state.clone()));
        match (port.iface, port.index) {
            (Interface::A, 0) if sent == 0 => {
                let idx = index_of(&self.alphabet, input)?;
                let next = State::vals(vec![1, idx, delivered]);
                match (self.noise, input) {
                    (Some(q), Value::Quantum(rho)) => {
                        let out = Value::Quantum(depolarize(rho, q)?);
                        Ok(Transition::sure(vec![(Port::new(Interface::B, 0), out)], State::vals(vec![1, idx, 1])))
                    }
                    (Some(_), _) => Ok(Transition::sure(vec![(Port::new(Interface::B, 0), input.clone())], State::vals(vec![1, idx, 1]))),
                    (None, _) => Ok(Transition::sure(vec![(Port::new(Interface::E, 0), input.clone())], next)),
                }
            }
            (Interface::E, 1) if delivered == 0 => {
                index_of(&self.inject, input)?;
                Ok(Transition::sure(vec![(Port::new(Interface::B, 0), input.clone())], State::vals(vec![sent, msg, 1])))
            }
            _ => same(),
        }
    }
}

/// Channel fully controlled by Eve, or an honest noisy quantum channel.
pub fn insecure_channel(kind: InsecureKind) -> Result<Res> {
    let res = match kind {
        InsecureKind::Classical { alphabet, inject } => Insecure { alphabet: symbols(&alphabet), inject: symbols(&inject), noise: None },
        InsecureKind::Quantum { alphabet, inject } => Insecure {
            alphabet: alphabet.into_iter().map(Value::Quantum).collect(),
            inject: inject.into_iter().map(Value::Quantum).collect(),
            noise: None,
        },
        InsecureKind::Noisy { alphabet, q } => {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::ProbabilityOutOfRange(q));
            }
            Insecure { alphabet: alphabet.into_iter().map(Value::Quantum).collect(), inject: vec![], noise: Some(q) }
        }
    };
    Ok(Arc::new(res))
}
