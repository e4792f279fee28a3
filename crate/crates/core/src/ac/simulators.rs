//! Simulators: converters plugged into the E interface of an ideal resource so
//! that it presents the same E interface as the real system.

use std::sync::Arc;

use super::{Conv, ConvTransition, Converter, PortSpec, State, Value};
use crate::error::{Error, Result};

/// Largest leaked length the one-time-pad simulator will branch over.
pub const MAX_SIM_BITS: u64 = 20;

struct OtpSim;

impl Converter for OtpSim {
    fn inner(&self) -> Vec<String> {
        vec!["leak".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("read")]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![]))]
    }

    fn on_outer(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }

    // A leaked length ℓ becomes a uniform ℓ-bit string.
    fn on_inner(&self, state: &State, _port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let len = input.as_sym().ok_or_else(|| Error::SchemaMismatch("leak expects a length".into()))?;
        if len > MAX_SIM_BITS {
            return Err(Error::UnsupportedSize(format!("{len}-bit leak")));
        }
        let n = 1u64 << len;
        Ok((0..n)
            .map(|y| ConvTransition::new(1.0 / n as f64, vec![(0, Value::Sym(y))], vec![], state.clone()))
            .collect())
    }
}

/// Simulator for the one-time pad: on learning the message length it shows
/// Eve a fresh uniform string of that length.
pub fn otp_simulator() -> Conv {
    Arc::new(OtpSim)
}

struct AuthSim {
    tag_bits: u32,
    inject: Vec<Value>,
}

const NONE: u64 = u64::MAX;

// State: [message x or NONE, tag y, resolved].
impl Converter for AuthSim {
    fn inner(&self) -> Vec<String> {
        vec!["read".into(), "switch".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("read"), PortSpec::new("inject", self.inject.clone())]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![NONE, 0, 0]))]
    }

    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v();
        let (x, y, resolved) = (v[0], v[1], v[2]);
        if port != 1 || resolved == 1 {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        let c = input.as_sym().ok_or_else(|| Error::SchemaMismatch("inject expects a symbol".into()))?;
        let accept = x != NONE && c == (x << self.tag_bits | y);
        let decision = Value::Sym(accept as u64);
        Ok(ConvTransition::sure(vec![], vec![(1, decision)], State::vals(vec![x, y, 1])))
    }

    // The message x read from the channel is shown as x‖y for a uniform tag y.
    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v();
        if port != 0 || v[0] != NONE {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        let x = input.as_sym().ok_or_else(|| Error::SchemaMismatch("read expects a symbol".into()))?;
        let n = 1u64 << self.tag_bits;
        Ok((0..n)
            .map(|y| {
                let shown = Value::Sym(x << self.tag_bits | y);
                ConvTransition::new(1.0 / n as f64, vec![(0, shown)], vec![], State::vals(vec![x, y, v[2]]))
            })
            .collect())
    }
}

/// Simulator for Wegman-Carter authentication over an authentic channel with
/// a deliver/block switch. Eve sees x‖y for a random `tag_bits`-bit y; an
/// injected c is delivered iff it equals that string.
pub fn auth_simulator(tag_bits: u32, inject: &[u64]) -> Result<Conv> {
    if tag_bits == 0 || tag_bits as u64 > MAX_SIM_BITS {
        return Err(Error::InvalidParameter { field: "tag_bits", reason: format!("{tag_bits} not in 1..={MAX_SIM_BITS}") });
    }
    Ok(Arc::new(AuthSim { tag_bits, inject: inject.iter().map(|&c| Value::Sym(c)).collect() }))
}

struct QkdSim {
    views: Vec<(f64, u64, bool)>,
}

// State: [started].
impl Converter for QkdSim {
    fn inner(&self) -> Vec<String> {
        vec!["switch".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::trigger("run")]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![0]))]
    }

    fn on_outer(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        if state.v()[0] == 1 {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        Ok(self
            .views
            .iter()
            .filter(|(p, ..)| *p > 0.0)
            .map(|&(p, view, abort)| {
                let switch = Value::Sym(!abort as u64);
                ConvTransition::new(p, vec![(0, Value::Sym(view))], vec![(0, switch)], State::vals(vec![1]))
            })
            .collect())
    }

    fn on_inner(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }
}

/// Simulator for a key-distribution protocol whose transcript distribution is
/// known: on `run` it samples a transcript `view` with its probability, shows
/// it to Eve, and sets the key switch to ⊥ exactly when that transcript aborts.
pub fn qkd_simulator(views: Vec<(f64, u64, bool)>) -> Result<Conv> {
    let total: f64 = views.iter().map(|v| v.0).sum();
    if (total - 1.0).abs() > 1e-9 || views.iter().any(|v| v.0 < 0.0) {
        return Err(Error::InvalidDistribution(format!("transcript weights sum to {total}")));
    }
    Ok(Arc::new(QkdSim { views }))
}
