use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::auth::{wc_tag, wc_verify, AsuHashFamily, AuthKey};
use super::otp::{otp_decrypt, otp_encrypt, sym, NONE};
use super::pool::{key_split, Allocation, KeyPool};
use crate::ac::resources::{insecure_channel, secret_key, secure_channel, ChannelVariant, InsecureKind, KeyVariant};
use crate::ac::{advantage_exact, attach, parallel, Conv, ConvTransition, Converter, Interface, PortSpec, State, Value};
use crate::bits::{xor, Bits};
use crate::error::{Error, Result};
use crate::qkd::{key_system, run_qkd, ProtocolParams, Scenario, Stage, TinyParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmtConfig {
    pub qkd: ProtocolParams,
    pub scenario: Scenario,
    /// Pre-shared key a_qkd; the same amount of fresh key is set aside to
    /// replace it.
    pub initial_key: usize,
    /// Wegman-Carter tag length m.
    pub tag_bits: u32,
    pub message_bits: usize,
}

impl Default for SmtConfig {
    fn default() -> Self {
        Self {
            qkd: ProtocolParams::default(),
            scenario: Scenario::honest(0.0),
            initial_key: 128,
            tag_bits: 32,
            message_bits: 64,
        }
    }
}

/// What Eve does to the classical messages.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tamper {
    #[default]
    None,
    /// Flips one bit of the protocol transcript sent to Bob.
    Transcript { bit: usize },
    /// XORs a mask into the ciphertext.
    Ciphertext { mask: Bits },
    /// XORs a mask into the message tag.
    Tag { mask: Bits },
    /// Replaces ciphertext and tag.
    Replace { ciphertext: Bits, tag: Bits },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum PipelineStage {
    QkdAuthentication,
    Qkd { at: Stage },
    KeySplit,
    MessageAuthentication,
}

/// Key bits spent and produced by one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyAccounting {
    pub initial: usize,
    pub initial_consumed: usize,
    /// Length n of the distributed key.
    pub qkd_key: usize,
    pub reserve: usize,
    pub otp: usize,
    pub otp_auth: usize,
    /// n − message − a_otp, the reserve included.
    pub leftover: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub delivered: Option<Bits>,
    pub abort: Option<PipelineStage>,
    /// Error rate estimated by the QKD stage.
    pub eta_hat: Option<f64>,
    pub eps_qkd: f64,
    pub eps_auth_qkd: f64,
    pub eps_auth_otp: f64,
    /// Sum of the three stage errors.
    pub eps_total: f64,
    pub key: KeyAccounting,
    /// Every allocation, from the initial pool and then the distributed key.
    pub ledger: Vec<Allocation>,
    /// No bit was handed out twice.
    pub ledger_ok: bool,
    pub ciphertext: Option<String>,
    pub tag: Option<String>,
}

impl PipelineReport {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }
}

fn flip(bits: &[u8], mask: &[u8]) -> Result<Bits> {
    xor(bits, mask)
}

fn text_bits(s: &str) -> Bits {
    s.bytes().flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1)).collect()
}

/// Sends `message` through QKD, authentication and the one-time pad.
///
/// The QKD transcript is authenticated once per direction with keys from the
/// initial pool; the distributed key is split into a reserve, the pad and the
/// message authentication key.
pub fn smt_pipeline<R: Rng + ?Sized>(config: &SmtConfig, message: &[u8], tamper: &Tamper, rng: &mut R) -> Result<PipelineReport> {
    if message.len() != config.message_bits {
        return Err(Error::LengthMismatch { expected: config.message_bits, got: message.len() });
    }
    if ![4, 8, 32].contains(&config.tag_bits) {
        return Err(Error::InvalidParameter { field: "tag_bits", reason: format!("{} not in {{4, 8, 32}}", config.tag_bits) });
    }
    let m = config.tag_bits;
    let auth_key = 2 * m as usize;
    let mut pool = KeyPool::random(config.initial_key, rng);
    let k_ab = pool.take(auth_key, "qkd-auth a->b")?;
    let k_ba = pool.take(auth_key, "qkd-auth b->a")?;

    let out = run_qkd(&config.qkd, &config.scenario, rng)?;
    let transcript = text_bits(&format!("{:?}", out.transcript.messages));
    let qkd_family = AsuHashFamily::for_length(m, transcript.len())?;
    let eps_auth_qkd = (2.0 * qkd_family.epsilon()).min(1.0);
    let eps_qkd = out.budget.as_ref().map_or(config.qkd.eps_pe + config.qkd.eps_ec + config.qkd.eps_pa, |b| b.global());
    let otp_family = AsuHashFamily::for_length(m, config.message_bits)?;
    let eps_auth_otp = otp_family.epsilon().min(1.0);

    let mut report = PipelineReport {
        delivered: None,
        abort: None,
        eta_hat: out.transcript.eta_hat,
        eps_qkd,
        eps_auth_qkd,
        eps_auth_otp,
        eps_total: eps_qkd + eps_auth_qkd + eps_auth_otp,
        key: KeyAccounting { initial: config.initial_key, initial_consumed: pool.consumed(), ..Default::default() },
        ledger: pool.ledger().to_vec(),
        ledger_ok: pool.audit(),
        ciphertext: None,
        tag: None,
    };

    let tag_ab = wc_tag(&qkd_family, &transcript, AuthKey::from_bits(&k_ab, m)?)?;
    let tag_ba = wc_tag(&qkd_family, &transcript, AuthKey::from_bits(&k_ba, m)?)?;
    let mut at_bob = transcript.clone();
    if let Tamper::Transcript { bit } = tamper {
        let i = bit % at_bob.len();
        at_bob[i] ^= 1;
    }
    let ok_bob = wc_verify(&qkd_family, &at_bob, &tag_ab, AuthKey::from_bits(&k_ab, m)?)?.is_some();
    let ok_alice = wc_verify(&qkd_family, &transcript, &tag_ba, AuthKey::from_bits(&k_ba, m)?)?.is_some();
    if !(ok_bob && ok_alice) {
        report.abort = Some(PipelineStage::QkdAuthentication);
        return Ok(report);
    }
    if let Some(stage) = out.transcript.abort {
        report.abort = Some(PipelineStage::Qkd { at: stage });
        return Ok(report);
    }
    let (Some(key_a), Some(key_b)) = (out.key_a, out.key_b) else {
        return Err(Error::InvalidParameter { field: "qkd.asymptotic", reason: "the pipeline needs a finite key".into() });
    };

    let n = key_a.len();
    let lengths = [config.initial_key, config.message_bits, auth_key];
    report.key.qkd_key = n;
    let mut pool_a = KeyPool::new(key_a);
    let mut pool_b = KeyPool::new(key_b);
    let (parts_a, parts_b) = match (key_split(&mut pool_a, &lengths), key_split(&mut pool_b, &lengths)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::PoolExhausted { .. }), _) | (_, Err(Error::PoolExhausted { .. })) => {
            report.abort = Some(PipelineStage::KeySplit);
            return Ok(report);
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let offset = config.initial_key;
    report.ledger.extend(pool_a.ledger().iter().map(|a| Allocation { start: a.start + offset, ..a.clone() }));
    report.ledger_ok &= pool_a.audit() && pool_b.audit();
    report.key.reserve = config.initial_key;
    report.key.otp = config.message_bits;
    report.key.otp_auth = auth_key;
    report.key.leftover = n - config.message_bits - auth_key;

    let y = otp_encrypt(message, &parts_a[1])?;
    let tag = wc_tag(&otp_family, &y, AuthKey::from_bits(&parts_a[2], m)?)?;
    let (y_bob, tag_bob) = match tamper {
        Tamper::Ciphertext { mask } => (flip(&y, mask)?, tag.clone()),
        Tamper::Tag { mask } => (y.clone(), flip(&tag, mask)?),
        Tamper::Replace { ciphertext, tag } => (ciphertext.clone(), tag.clone()),
        Tamper::None | Tamper::Transcript { .. } => (y.clone(), tag.clone()),
    };
    report.ciphertext = Some(crate::bits::to_hex(&y));
    report.tag = Some(crate::bits::to_hex(&tag));
    if y_bob.len() != config.message_bits {
        report.abort = Some(PipelineStage::MessageAuthentication);
        return Ok(report);
    }
    match wc_verify(&otp_family, &y_bob, &tag_bob, AuthKey::from_bits(&parts_b[2], m)?)? {
        Some(y) => report.delivered = Some(otp_decrypt(&y, &parts_b[1])?),
        None => report.abort = Some(PipelineStage::MessageAuthentication),
    }
    Ok(report)
}

const TAG_BITS: u32 = 4;

// Alice: fetch the distributed key, then the authentication key, then send
// (x ⊕ k)‖h(x ⊕ k). State: [x or NONE, pad key or NONE].
struct SmtSender {
    family: AsuHashFamily,
}

impl Converter for SmtSender {
    fn inner(&self) -> Vec<String> {
        vec!["key".into(), "key".into(), "in".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::symbols("in", 2)]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![NONE, NONE]))]
    }

    fn on_outer(&self, state: &State, _port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        if state.v()[0] != NONE {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        let x = sym(input, "in")?;
        Ok(ConvTransition::sure(vec![], vec![(0, Value::Unit)], State::vals(vec![x, NONE])))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v();
        let same = || Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        match (port, input) {
            (0, Value::Sym(k)) if v[0] != NONE => Ok(ConvTransition::sure(vec![], vec![(1, Value::Unit)], State::vals(vec![v[0], *k]))),
            (1, Value::Sym(ak)) if v[1] != NONE => {
                let y = v[0] ^ v[1];
                let c = y << TAG_BITS | self.family.hash_word(y, AuthKey { k1: ak >> TAG_BITS, k2: ak & 0xf });
                Ok(ConvTransition::sure(vec![], vec![(2, Value::Sym(c))], state.clone()))
            }
            _ => same(),
        }
    }
}

// Bob: on receiving c fetch both keys, verify and decrypt.
// State: [c or NONE, pad key or NONE].
struct SmtReceiver {
    family: AsuHashFamily,
}

impl Converter for SmtReceiver {
    fn inner(&self) -> Vec<String> {
        vec!["key".into(), "key".into(), "out".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("out")]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![NONE, NONE]))]
    }

    fn on_outer(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v();
        let same = || Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        match (port, input) {
            (2, _) if v[0] == NONE => {
                let c = sym(input, "out")?;
                Ok(ConvTransition::sure(vec![], vec![(0, Value::Unit)], State::vals(vec![c, NONE])))
            }
            (0, Value::Bot) if v[0] != NONE => Ok(ConvTransition::sure(vec![(0, Value::Bot)], vec![], state.clone())),
            (0, Value::Sym(k)) if v[0] != NONE => Ok(ConvTransition::sure(vec![], vec![(1, Value::Unit)], State::vals(vec![v[0], *k]))),
            (1, Value::Sym(ak)) if v[1] != NONE => {
                let (y, t) = (v[0] >> TAG_BITS, v[0] & 0xf);
                let ok = self.family.hash_word(y, AuthKey { k1: ak >> TAG_BITS, k2: ak & 0xf }) == t;
                let out = if ok { Value::Sym(y ^ v[1]) } else { Value::Bot };
                Ok(ConvTransition::sure(vec![(0, out)], vec![], state.clone()))
            }
            _ => same(),
        }
    }
}

// Simulates the distributed-key transcript, the ciphertext and its tag.
// State: [ran, pass, sent, shown c or NONE, injected c or NONE, resolved].
struct SmtSim {
    views: Vec<(f64, u64, bool)>,
    inject: Vec<Value>,
}

impl SmtSim {
    fn resolve(v: &mut [u64]) -> Vec<(usize, Value)> {
        if v[5] == 1 || v[4] == NONE || v[0] == 0 {
            return vec![];
        }
        v[5] = 1;
        let accept = v[1] == 1 && v[3] != NONE && v[4] == v[3];
        vec![(1, Value::Sym(accept as u64))]
    }

    // Shows a uniform y‖t when the message has been sent and the key exists.
    fn show(prob: f64, mut out: Vec<(usize, Value)>, v: Vec<u64>) -> Vec<ConvTransition> {
        if !(v[0] == 1 && v[1] == 1 && v[2] == 1 && v[3] == NONE) {
            let mut next = v;
            let inner = Self::resolve(&mut next);
            return vec![ConvTransition::new(prob, out, inner, State::vals(next))];
        }
        let n = 2u64 << TAG_BITS;
        let read = out.len();
        out.push((1, Value::Unit));
        (0..n)
            .map(|c| {
                let mut next = v.clone();
                next[3] = c;
                let inner = Self::resolve(&mut next);
                let mut out = out.clone();
                out[read] = (1, Value::Sym(c));
                ConvTransition::new(prob / n as f64, out, inner, State::vals(next))
            })
            .collect()
    }
}

impl Converter for SmtSim {
    fn inner(&self) -> Vec<String> {
        vec!["leak".into(), "switch".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::trigger("run"), PortSpec::output("read"), PortSpec::new("inject", self.inject.clone())]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![0, 0, 0, NONE, NONE, 0]))]
    }

    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v().to_vec();
        match port {
            0 if v[0] == 0 => Ok(self
                .views
                .iter()
                .filter(|view| view.0 > 0.0)
                .flat_map(|&(p, id, abort)| {
                    let mut next = v.clone();
                    next[0] = 1;
                    next[1] = !abort as u64;
                    Self::show(p, vec![(0, Value::Sym(id))], next)
                })
                .collect()),
            2 if v[4] == NONE => {
                let mut next = v;
                next[4] = sym(input, "inject")?;
                Ok(Self::show(1.0, vec![], next))
            }
            _ => Ok(ConvTransition::sure(vec![], vec![], state.clone())),
        }
    }

    fn on_inner(&self, state: &State, port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        let v = state.v();
        if port != 0 || v[2] == 1 {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        let mut next = v.to_vec();
        next[2] = 1;
        Ok(Self::show(1.0, vec![], next))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyPipelineAudit {
    pub advantage: f64,
    pub eps_qkd: f64,
    pub eps_auth: f64,
    pub eps_total: f64,
    pub nodes: usize,
}

impl TinyPipelineAudit {
    pub fn holds(&self) -> bool {
        self.advantage <= self.eps_total + 1e-9
    }
}

/// Exact audit of a one-bit message padded with a one-bit distributed key
/// from the tiny protocol `params` and authenticated with a 4-bit tag under
/// a pre-shared key, against a secure channel with a simulator.
pub fn tiny_pipeline_audit(params: &TinyParams, scenario: &Scenario) -> Result<TinyPipelineAudit> {
    if params.key_length != 1 {
        return Err(Error::InvalidParameter { field: "key_length", reason: format!("{} != 1", params.key_length) });
    }
    let ks = key_system(params, scenario)?;
    let family = AsuHashFamily::new(TAG_BITS, 1)?;
    let cipher: Vec<u64> = (0..2u64 << TAG_BITS).collect();
    let channel = insecure_channel(InsecureKind::Classical { alphabet: cipher.clone(), inject: cipher.clone() })?;
    let real = parallel(parallel(ks.real, secret_key(family.key_bits(), KeyVariant::AlwaysDeliver)?), channel);
    let real = attach(real, Arc::new(SmtSender { family: family.clone() }) as Conv, Interface::A)?;
    let real = attach(real, Arc::new(SmtReceiver { family: family.clone() }) as Conv, Interface::B)?;
    let sim: Conv = Arc::new(SmtSim { views: ks.views, inject: cipher.iter().map(|&c| Value::Sym(c)).collect() });
    let ideal = attach(secure_channel(1, &[0, 1], ChannelVariant::Switch), sim, Interface::E)?;
    let report = advantage_exact(&real, &ideal, 3)?;
    let eps_auth = family.epsilon();
    Ok(TinyPipelineAudit {
        advantage: report.value,
        eps_qkd: ks.eps_global,
        eps_auth,
        eps_total: ks.eps_global + eps_auth,
        nodes: report.nodes,
    })
}
