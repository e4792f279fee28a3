//! BB84-family key distribution: raw key, parameter estimation, the full
//! protocol and its exhaustive audit at tiny sizes.

pub mod audit;
pub mod channel;
pub mod equivalence;
pub mod pe;
pub mod raw;
pub mod run;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

pub use audit::{exhaustive_audit, ideal_audit, key_system, AuditReport, KeySystem, TinyParams};
pub use channel::{intercept_resend_attack, Attack, Intercept, Scenario};
pub use equivalence::{convert_eb_to_pm, EbToPm, MeasurementSpec};
pub use pe::{parameter_estimation, PeOutcome};
pub use raw::{raw_key_eb, raw_key_pm, raw_key_postponed, RawKey};
pub use run::{run_qkd, ProtocolTranscript, QkdOutcome};

/// One transmitted signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub alice_basis: u8,
    pub alice_bit: u8,
    pub bob_basis: u8,
    /// None when Bob received nothing to measure.
    pub bob_bit: Option<u8>,
    pub eve: Option<Intercept>,
}

/// Basis-matched bits and the rounds they came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SiftedKeys {
    pub x: Bits,
    pub y: Bits,
    /// Increasing round indices.
    pub indices: Vec<usize>,
}

/// A classical message on the public channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PublicMessage {
    Bases { alice: Vec<u8>, bob: Vec<u8> },
    Sample { positions: Vec<usize>, x: Bits, y: Bits },
    Syndrome { block: usize, bits: String },
    Tag { k1: u64, k2: u64, tag: String },
    Seed { n: usize, l: usize, bits: String },
    Abort { stage: Stage },
}

/// Everything Eve has: her per-round records and the public transcript.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EveKnowledge {
    pub intercepts: Vec<Option<Intercept>>,
    pub transcript: Vec<PublicMessage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    RawKey,
    ParameterEstimation,
    Reconciliation,
    Verification,
}

/// Information reconciliation layout: the sifted string is split into blocks
/// of `block` bits, each reconciled with its own syndrome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrConfig {
    pub block: usize,
    /// Syndrome bits per block; derived from η0 and ε_EC when absent.
    pub syndrome: Option<usize>,
    /// Heaviest error pattern the decoder corrects.
    pub max_weight: usize,
    /// Seed of the public parity matrices.
    pub code_seed: u64,
}

impl Default for IrConfig {
    fn default() -> Self {
        Self { block: 16, syndrome: None, max_weight: 4, code_seed: 0x1c0d_e5ee_d000_0001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    /// Sifted bits to collect.
    pub n: usize,
    /// Parameter-estimation sample size.
    pub s: usize,
    /// QBER threshold η0.
    pub eta0: f64,
    pub eps_pe: f64,
    pub eps_ec: f64,
    pub eps_pa: f64,
    /// Verification tag length v; 0 skips verification.
    pub tag_bits: u32,
    pub ir: IrConfig,
    /// Report the asymptotic rate instead of running reconciliation and
    /// privacy amplification.
    pub asymptotic: bool,
    /// Round limit; 20·n when absent.
    pub round_cap: Option<usize>,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            n: 2048,
            s: 256,
            eta0: 0.11,
            eps_pe: 1e-6,
            eps_ec: 1e-6,
            eps_pa: 1e-6,
            tag_bits: 32,
            ir: IrConfig::default(),
            asymptotic: false,
            round_cap: None,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidParameter { field, reason });
        if self.n == 0 {
            return bad("n", "must be positive".into());
        }
        if self.s >= self.n {
            return bad("s", format!("sample size {} must be below n = {}", self.s, self.n));
        }
        if !(0.0..0.5).contains(&self.eta0) {
            return bad("eta0", format!("{} not in [0, 1/2)", self.eta0));
        }
        for (field, v) in [("eps_pe", self.eps_pe), ("eps_ec", self.eps_ec), ("eps_pa", self.eps_pa)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(field, format!("{v} not in (0, 1)"));
            }
        }
        if ![0, 4, 8, 32].contains(&self.tag_bits) {
            return bad("tag_bits", format!("{} not in {{0, 4, 8, 32}}", self.tag_bits));
        }
        if self.ir.block == 0 || self.ir.block > crate::postprocessing::MAX_BLOCK {
            return bad("ir.block", format!("{} not in 1..={}", self.ir.block, crate::postprocessing::MAX_BLOCK));
        }
        if let Some(k) = self.ir.syndrome {
            if k > self.ir.block {
                return bad("ir.syndrome", format!("{k} exceeds block length {}", self.ir.block));
            }
        }
        Ok(())
    }
}
