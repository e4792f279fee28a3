use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pe::parameter_estimation;
use super::raw::raw_key_pm;
use super::{EveKnowledge, ProtocolParams, PublicMessage, Scenario, Stage};
use crate::bits::{to_hex, Bits};
use crate::error::{Error, Result};
use crate::postprocessing::{
    asymptotic_rate, ir_decode, ir_encode, key_length, pa_extract, syndrome_length, verify_tag, CodingScheme, KeyBudget,
    TagSeed, ToeplitzSeed,
};

/// Public record of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub rounds: usize,
    pub sifted: usize,
    pub eta_hat: Option<f64>,
    pub leak: usize,
    pub key_length: usize,
    pub abort: Option<Stage>,
    pub messages: Vec<PublicMessage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QkdOutcome {
    /// None on abort and in asymptotic mode.
    pub key_a: Option<Bits>,
    pub key_b: Option<Bits>,
    pub transcript: ProtocolTranscript,
    pub eve: EveKnowledge,
    pub budget: Option<KeyBudget>,
    /// Signed asymptotic rate 1 − 2h(η̂), asymptotic mode only.
    pub rate: Option<f64>,
}

impl QkdOutcome {
    pub fn aborted(&self) -> bool {
        self.transcript.abort.is_some()
    }

    fn abort(mut transcript: ProtocolTranscript, mut eve: EveKnowledge, stage: Stage, budget: Option<KeyBudget>) -> Self {
        transcript.abort = Some(stage);
        transcript.messages.push(PublicMessage::Abort { stage });
        eve.transcript = transcript.messages.clone();
        Self { key_a: None, key_b: None, transcript, eve, budget, rate: None }
    }
}

/// Splits `m` bits into blocks of at most `block` bits.
fn blocks(m: usize, block: usize) -> Vec<(usize, usize)> {
    (0..m).step_by(block).map(|start| (start, block.min(m - start))).collect()
}

/// Runs the whole protocol once: raw key, parameter estimation, blockwise
/// reconciliation, verification and privacy amplification.
pub fn run_qkd<R: Rng + ?Sized>(params: &ProtocolParams, scenario: &Scenario, rng: &mut R) -> Result<QkdOutcome> {
    params.validate()?;
    let channel = scenario.channel()?;
    let mut transcript = ProtocolTranscript::default();
    let raw = match raw_key_pm(params.n, &channel, params.round_cap, rng) {
        Ok(raw) => raw,
        Err(Error::RoundCap(cap)) => {
            transcript.rounds = cap;
            return Ok(QkdOutcome::abort(transcript, EveKnowledge::default(), Stage::RawKey, None));
        }
        Err(e) => return Err(e),
    };
    transcript.rounds = raw.rounds.len();
    transcript.sifted = raw.sifted.x.len();
    transcript.messages = raw.eve.transcript.clone();
    let mut eve = raw.eve;
    let (x, y) = (raw.sifted.x, raw.sifted.y);

    if params.asymptotic {
        let errors = x.iter().zip(&y).filter(|(a, b)| a != b).count();
        let eta = errors as f64 / x.len() as f64;
        transcript.eta_hat = Some(eta);
        if eta > params.eta0 {
            return Ok(QkdOutcome::abort(transcript, eve, Stage::ParameterEstimation, None));
        }
        eve.transcript = transcript.messages.clone();
        return Ok(QkdOutcome { key_a: None, key_b: None, transcript, eve, budget: None, rate: Some(asymptotic_rate(eta)) });
    }

    let pe = parameter_estimation(&x, &y, params.s, params.eta0, rng)?;
    transcript.eta_hat = Some(pe.eta_hat);
    transcript.messages.push(PublicMessage::Sample {
        positions: pe.sample.clone(),
        x: pe.sample.iter().map(|&i| x[i]).collect(),
        y: pe.sample.iter().map(|&i| y[i]).collect(),
    });
    if !pe.ok {
        return Ok(QkdOutcome::abort(transcript, eve, Stage::ParameterEstimation, None));
    }
    let (xa, yb) = (pe.x_rest, pe.y_rest);
    let m = xa.len();
    let mut budget = KeyBudget::new(params.eps_pe, params.eps_ec, params.eps_pa, params.tag_bits as usize, m)?;

    let layout = blocks(m, params.ir.block);
    let eps_block = params.eps_ec / layout.len().max(1) as f64;
    let mut schemes: HashMap<usize, CodingScheme> = HashMap::new();
    let mut x_hat = Bits::with_capacity(m);
    let mut leak = 0;
    let mut failed = false;
    for (i, &(start, len)) in layout.iter().enumerate() {
        if !schemes.contains_key(&len) {
            let k = params.ir.syndrome.map_or_else(|| syndrome_length(len, params.eta0, eps_block), |k| k.min(len));
            let scheme = CodingScheme::random(len, k, params.ir.code_seed ^ len as u64, params.ir.max_weight)?
                .with_design(params.eta0, eps_block);
            schemes.insert(len, scheme);
        }
        let scheme = &schemes[&len];
        let c = ir_encode(&xa[start..start + len], scheme)?;
        leak += c.len();
        transcript.messages.push(PublicMessage::Syndrome { block: i, bits: to_hex(&c) });
        match ir_decode(&c, &yb[start..start + len], scheme) {
            Ok(block) => x_hat.extend(block),
            Err(Error::DecodeFailure { .. }) => {
                failed = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    budget.leak = leak;
    transcript.leak = leak;
    if failed {
        return Ok(QkdOutcome::abort(transcript, eve, Stage::Reconciliation, Some(budget)));
    }

    if params.tag_bits > 0 {
        let seed = TagSeed::random(params.tag_bits, rng)?;
        let tag = verify_tag(&xa, params.tag_bits, seed)?;
        transcript.messages.push(PublicMessage::Tag { k1: seed.k1, k2: seed.k2, tag: to_hex(&tag) });
        if verify_tag(&x_hat, params.tag_bits, seed)? != tag {
            return Ok(QkdOutcome::abort(transcript, eve, Stage::Verification, Some(budget)));
        }
    }

    let l = key_length(m, pe.eta_hat, params.s, leak, &budget);
    budget.length = l;
    transcript.key_length = l;
    let (key_a, key_b) = if l == 0 {
        (Bits::new(), Bits::new())
    } else {
        let seed = ToeplitzSeed::random(m, l, rng);
        transcript.messages.push(PublicMessage::Seed { n: m, l, bits: to_hex(seed.bits()) });
        (pa_extract(&xa, &seed)?, pa_extract(&x_hat, &seed)?)
    };
    eve.transcript = transcript.messages.clone();
    Ok(QkdOutcome { key_a: Some(key_a), key_b: Some(key_b), transcript, eve, budget: Some(budget), rate: None })
}
