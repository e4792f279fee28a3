//! Channel models for BB84 signals: honest noise and intercept-resend.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ac::resources::{insecure_channel, InsecureKind};
use crate::ac::{attach, Conv, ConvTransition, Converter, Interface, Port, PortSpec, Res, State, Value};
use crate::error::{Error, Result};
use crate::quantum::{bb84_state, depolarize, DensityOperator, Povm};

/// The four BB84 states, indexed by basis·2 + bit.
pub fn bb84_alphabet() -> Vec<DensityOperator> {
    (0..4).map(|i| bb84_state(i & 1, i >> 1).to_density()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Attack {
    None,
    /// Each signal is intercepted with probability f.
    InterceptResend { f: f64 },
}

/// Quantum channel between Alice and Bob: depolarizing noise q, applied after
/// any attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub q: f64,
    pub attack: Attack,
}

impl Scenario {
    pub fn honest(q: f64) -> Self {
        Self { q, attack: Attack::None }
    }

    pub fn intercept_resend(f: f64) -> Self {
        Self { q: 0.0, attack: Attack::InterceptResend { f } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParameter { field: "q", reason: format!("{} not in [0, 1]", self.q) });
        }
        if let Attack::InterceptResend { f } = self.attack {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidParameter { field: "f", reason: format!("{f} not in [0, 1]") });
            }
        }
        Ok(())
    }

    /// Channel resource with A port "in" taking BB84 states and B port "out".
    /// Under attack, E port 0 carries Eve's measurement record.
    pub fn channel(&self) -> Result<Res> {
        self.validate()?;
        match self.attack {
            Attack::None => insecure_channel(InsecureKind::Noisy { alphabet: bb84_alphabet(), q: self.q }),
            Attack::InterceptResend { f } => {
                let raw = insecure_channel(InsecureKind::Quantum { alphabet: bb84_alphabet(), inject: bb84_alphabet() })?;
                let attacked = attach(raw, intercept_resend_attack(f)?, Interface::E)?;
                if self.q > 0.0 {
                    attach(attacked, depolarizing_converter(self.q)?, Interface::B)
                } else {
                    Ok(attacked)
                }
            }
        }
    }
}

/// Eve's record of one intercepted signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Intercept {
    pub basis: u8,
    pub outcome: u8,
}

impl Intercept {
    pub fn symbol(self) -> u64 {
        (self.basis << 1 | self.outcome) as u64
    }

    pub fn from_value(v: &Value) -> Option<Self> {
        v.as_sym().map(|s| Self { basis: (s >> 1) as u8 & 1, outcome: s as u8 & 1 })
    }
}

struct InterceptResend {
    f: f64,
    alphabet: Vec<DensityOperator>,
    povms: [Povm; 2],
}

impl Converter for InterceptResend {
    fn inner(&self) -> Vec<String> {
        vec!["read".into(), "inject".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("record")]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![]))]
    }

    fn on_outer(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let Value::Quantum(rho) = input else {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        };
        if port != 0 {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        let mut out = Vec::new();
        if self.f < 1.0 {
            out.push(ConvTransition::new(1.0 - self.f, vec![(0, Value::Bot)], vec![(1, input.clone())], state.clone()));
        }
        if self.f > 0.0 {
            for basis in 0..2u8 {
                let probs = self.povms[basis as usize].probabilities(rho)?;
                for (outcome, p) in probs.into_iter().enumerate() {
                    if p <= 1e-15 {
                        continue;
                    }
                    let rec = Intercept { basis, outcome: outcome as u8 };
                    let resent = Value::Quantum(self.alphabet[(basis as usize) << 1 | outcome].clone());
                    out.push(ConvTransition::new(
                        self.f * 0.5 * p,
                        vec![(0, Value::Sym(rec.symbol()))],
                        vec![(1, resent)],
                        state.clone(),
                    ));
                }
            }
        }
        Ok(out)
    }
}

/// Eve intercepts each signal with probability `f`, measures it in a uniformly
/// random BB84 basis, records (basis, outcome) and resends the matching BB84
/// state; otherwise she forwards it and records ⊥. Attach at E of an insecure
/// quantum channel over the BB84 alphabet.
pub fn intercept_resend_attack(f: f64) -> Result<Conv> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::ProbabilityOutOfRange(f));
    }
    Ok(Arc::new(InterceptResend { f, alphabet: bb84_alphabet(), povms: [Povm::bb84(0), Povm::bb84(1)] }))
}

struct Depolarizing {
    q: f64,
}

impl Converter for Depolarizing {
    fn inner(&self) -> Vec<String> {
        vec!["out".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("out")]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![]))]
    }

    fn on_outer(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = match input {
            Value::Quantum(rho) => Value::Quantum(depolarize(rho, self.q)?),
            other => other.clone(),
        };
        Ok(ConvTransition::sure(vec![(port, v)], vec![], state.clone()))
    }
}

/// Depolarizes every quantum value Bob receives on his "out" port.
pub fn depolarizing_converter(q: f64) -> Result<Conv> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::ProbabilityOutOfRange(q));
    }
    Ok(Arc::new(Depolarizing { q }))
}

/// One exact outcome of sending a BB84 state through a channel and measuring
/// in Bob's basis.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    pub prob: f64,
    pub bob_bit: u8,
    pub eve: Option<Intercept>,
}

/// All outcomes of one round with Alice sending (bit, basis) and Bob measuring
/// in `bob_basis`, enumerated from the channel's transitions.
pub fn round_outcomes(channel: &Res, bit: u8, basis: u8, bob_basis: u8) -> Result<Vec<RoundOutcome>> {
    let input = Value::Quantum(bb84_state(bit, basis).to_density());
    let povm = Povm::bb84(bob_basis);
    let mut out = Vec::new();
    for (p0, s0) in channel.init() {
        for t in channel.step(&s0, Port::new(Interface::A, 0), &input)? {
            let mut eve = None;
            let mut bob = None;
            for (port, v) in &t.outputs {
                match (port.iface, v) {
                    (Interface::B, Value::Quantum(rho)) => bob = Some(rho.clone()),
                    (Interface::E, v) => eve = Intercept::from_value(v),
                    _ => {}
                }
            }
            let rho = bob.ok_or_else(|| Error::SchemaMismatch("channel delivered nothing to Bob".into()))?;
            for (y, py) in povm.probabilities(&rho)?.into_iter().enumerate() {
                let prob = p0 * t.prob * py;
                if prob > 0.0 {
                    out.push(RoundOutcome { prob, bob_bit: y as u8, eve });
                }
            }
        }
    }
    Ok(out)
}

/// Exact error probability on a basis-matched round.
pub fn sifted_error_rate(channel: &Res) -> Result<f64> {
    let mut err = 0.0;
    for basis in 0..2 {
        for bit in 0..2 {
            for o in round_outcomes(channel, bit, basis, basis)? {
                if o.bob_bit != bit {
                    err += 0.25 * o.prob;
                }
            }
        }
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_channel_error_is_half_q() {
        for q in [0.0, 0.1, 0.3] {
            let e = sifted_error_rate(&Scenario::honest(q).channel().unwrap()).unwrap();
            assert!((e - q / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn intercept_resend_error_is_quarter_f() {
        for f in [0.0, 0.4, 1.0] {
            let e = sifted_error_rate(&Scenario::intercept_resend(f).channel().unwrap()).unwrap();
            assert!((e - f / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_attack_guessing_probability() {
        // Eve guesses X from her outcome when her basis matched, else at random.
        let ch = Scenario::intercept_resend(1.0).channel().unwrap();
        let mut guess = 0.0;
        for basis in 0..2 {
            for bit in 0..2 {
                for o in round_outcomes(&ch, bit, basis, basis).unwrap() {
                    let rec = o.eve.unwrap();
                    let right = if rec.basis == basis { rec.outcome == bit } else { true };
                    let w = if rec.basis == basis { 1.0 } else { 0.5 };
                    if right {
                        guess += 0.25 * o.prob * w;
                    }
                }
            }
        }
        assert!((guess - 0.75).abs() < 1e-12);
    }

    #[test]
    fn outcomes_are_normalized() {
        let s = Scenario { q: 0.2, attack: Attack::InterceptResend { f: 0.5 } };
        let ch = s.channel().unwrap();
        let total: f64 = round_outcomes(&ch, 1, 1, 0).unwrap().iter().map(|o| o.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((sifted_error_rate(&ch).unwrap() - (0.5 / 4.0 + 0.2 / 2.0 - 0.2 * 0.5 / 4.0)).abs() < 1e-12);
    }
}
