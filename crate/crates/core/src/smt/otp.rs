use std::sync::Arc;

use crate::ac::resources::{authentic_channel, secret_key, secure_channel, ChannelVariant, KeyVariant};
use crate::ac::simulators::otp_simulator;
use crate::ac::{advantage_exact, attach, parallel, Conv, ConvTransition, Converter, Interface, PortSpec, Res, State, Value};
use crate::bits::{xor, Bits};
use crate::error::{Error, Result};

/// y = x ⊕ k.
pub fn otp_encrypt(x: &[u8], k: &[u8]) -> Result<Bits> {
    xor(x, k)
}

pub fn otp_decrypt(y: &[u8], k: &[u8]) -> Result<Bits> {
    xor(y, k)
}

pub(crate) const NONE: u64 = u64::MAX;

pub(crate) fn sym(v: &Value, what: &str) -> Result<u64> {
    v.as_sym().ok_or_else(|| Error::SchemaMismatch(format!("{what} expects a symbol, got {v}")))
}

// State: [message or NONE].
struct OtpSender {
    messages: Vec<u64>,
}

impl Converter for OtpSender {
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
            (0, Value::Sym(k)) if x != NONE => Ok(ConvTransition::sure(vec![], vec![(1, Value::Sym(x ^ k))], state.clone())),
            _ => Ok(ConvTransition::sure(vec![], vec![], state.clone())),
        }
    }
}

// State: [ciphertext or NONE].
struct OtpReceiver;

impl Converter for OtpReceiver {
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
        let y = state.v()[0];
        match port {
            1 if y == NONE => {
                let y = sym(input, "out")?;
                Ok(ConvTransition::sure(vec![], vec![(0, Value::Unit)], State::vals(vec![y])))
            }
            0 if y != NONE => {
                let out = match input {
                    Value::Sym(k) => Value::Sym(y ^ k),
                    _ => Value::Bot,
                };
                Ok(ConvTransition::sure(vec![(0, out)], vec![], state.clone()))
            }
            _ => Ok(ConvTransition::sure(vec![], vec![], state.clone())),
        }
    }
}

/// Real one-time-pad system π_A π_B (K ∥ A) for `bits`-bit messages drawn
/// from `messages`.
pub fn otp_real(bits: usize, messages: &[u64]) -> Result<Res> {
    otp_with_key(secret_key(bits, KeyVariant::AlwaysDeliver)?, bits, messages)
}

/// [`otp_real`] with any key resource presenting the same ports.
pub fn otp_with_key(key: Res, bits: usize, messages: &[u64]) -> Result<Res> {
    let all: Vec<u64> = (0..1u64 << bits).collect();
    let r = parallel(key, authentic_channel(&all, ChannelVariant::Idealized));
    let r = attach(r, Arc::new(OtpSender { messages: messages.to_vec() }) as Conv, Interface::A)?;
    attach(r, Arc::new(OtpReceiver) as Conv, Interface::B)
}

/// Secure channel with the random-string simulator at E.
pub fn otp_ideal(bits: usize, messages: &[u64]) -> Result<Res> {
    attach(secure_channel(bits, messages, ChannelVariant::Idealized), otp_simulator(), Interface::E)
}

/// Exact distinguishing advantage between [`otp_real`] and [`otp_ideal`]
/// over every `bits`-bit message.
pub fn otp_audit(bits: usize) -> Result<f64> {
    let messages: Vec<u64> = (0..1u64 << bits).collect();
    let real = otp_real(bits, &messages)?;
    let ideal = otp_ideal(bits, &messages)?;
    Ok(advantage_exact(&real, &ideal, 2)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encrypt_example() {
        assert_eq!(otp_encrypt(&[0, 1, 0, 1], &[1, 1, 0, 0]).unwrap(), vec![1, 0, 0, 1]);
        assert_eq!(otp_decrypt(&[1, 0, 0, 1], &[1, 1, 0, 0]).unwrap(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(otp_encrypt(&[0, 1], &[1]).is_err());
    }

    #[test]
    fn one_and_two_bit_pads_are_perfect() {
        assert!(otp_audit(1).unwrap() < 1e-12);
        assert!(otp_audit(2).unwrap() < 1e-12);
    }

    #[test]
    fn constant_key_leaks_the_message() {
        let real = otp_with_key(secret_key(0, KeyVariant::AlwaysDeliver).unwrap(), 1, &[0, 1]).unwrap();
        let ideal = otp_ideal(1, &[0, 1]).unwrap();
        assert!((advantage_exact(&real, &ideal, 2).unwrap().value - 0.5).abs() < 1e-12);
    }
}
