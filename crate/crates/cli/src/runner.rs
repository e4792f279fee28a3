//! Seeded trials of one scenario, fanned out over a worker pool.

use std::time::Instant;

use qkd_core::bits::random_bits;
use qkd_core::postprocessing::KeyBudget;
use qkd_core::qkd::{run_qkd, PublicMessage};
use qkd_core::smt::smt_pipeline;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::seed::stream_seed;

pub const SCHEMA_VERSION: u32 = 1;

/// One line of the transcript file.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRow {
    pub schema: u32,
    pub scenario: String,
    pub trial: usize,
    pub seed: u64,
    pub abort: bool,
    pub abort_stage: Option<serde_json::Value>,
    pub eta_hat: Option<f64>,
    pub sifted: usize,
    pub leak: usize,
    pub key_length: usize,
    /// Signed asymptotic rate, asymptotic mode only.
    pub rate: Option<f64>,
    pub eps_corr: f64,
    pub eps_secr: f64,
    pub eps_global: f64,
    /// Whether Bob received Alice's message intact (smt mode).
    pub delivered: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub messages: Option<Vec<PublicMessage>>,
}

impl TrialRow {
    /// ℓ/n, or the signed asymptotic rate when there is one.
    pub fn rate_per_bit(&self, n: usize) -> f64 {
        self.rate.unwrap_or(self.key_length as f64 / n as f64)
    }
}

/// Error budget the configuration declares for an accepted run.
pub fn declared_budget(config: &ScenarioConfig) -> CliResult<KeyBudget> {
    let p = &config.protocol;
    Ok(KeyBudget::new(p.eps_pe, p.eps_ec, p.eps_pa, p.tag_bits as usize, p.n - p.s)?)
}

fn stage_value<T: Serialize>(stage: Option<T>) -> CliResult<Option<serde_json::Value>> {
    Ok(stage.map(|s| serde_json::to_value(s)).transpose()?)
}

fn run_trial(config: &ScenarioConfig, budget: &KeyBudget, trial: usize) -> CliResult<TrialRow> {
    let seed = stream_seed(config.seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = config.timing.then(Instant::now);
    let mut row = TrialRow {
        schema: SCHEMA_VERSION,
        scenario: config.name.clone(),
        trial,
        seed,
        abort: false,
        abort_stage: None,
        eta_hat: None,
        sifted: 0,
        leak: 0,
        key_length: 0,
        rate: None,
        eps_corr: budget.eps_corr,
        eps_secr: budget.eps_secr,
        eps_global: budget.global(),
        delivered: None,
        runtime_ms: None,
        messages: None,
    };
    match config.mode {
        Mode::Qkd => {
            let out = run_qkd(&config.protocol, &config.channel.scenario(), &mut rng)?;
            let t = &out.transcript;
            row.abort = t.abort.is_some();
            row.abort_stage = stage_value(t.abort)?;
            row.eta_hat = t.eta_hat;
            row.sifted = t.sifted;
            row.leak = t.leak;
            row.key_length = t.key_length;
            row.rate = out.rate;
            if let Some(b) = &out.budget {
                (row.eps_corr, row.eps_secr, row.eps_global) = (b.eps_corr, b.eps_secr, b.global());
            }
            if config.record_messages {
                row.messages = Some(out.transcript.messages);
            }
        }
        Mode::Smt => {
            let message = random_bits(&mut rng, config.smt.message_bits);
            let report = smt_pipeline(&config.smt_config(), &message, &config.smt.tamper, &mut rng)?;
            row.abort = report.aborted();
            row.abort_stage = stage_value(report.abort)?;
            row.eta_hat = report.eta_hat;
            row.key_length = report.key.qkd_key;
            row.eps_global = report.eps_total;
            row.delivered = Some(report.delivered.as_ref() == Some(&message));
        }
    }
    row.runtime_ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
    Ok(row)
}

/// Pool with `threads` workers; 0 means one per core.
pub fn pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))
}

/// Runs every trial; rows come back in trial order whatever the thread count.
pub fn run_trials(config: &ScenarioConfig, pool: &rayon::ThreadPool) -> CliResult<Vec<TrialRow>> {
    let budget = declared_budget(config)?;
    pool.install(|| (0..config.trials).into_par_iter().map(|i| run_trial(config, &budget, i)).collect())
}

/// One line of the summary CSV.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub trials: usize,
    pub abort_rate: f64,
    /// Mean η̂ over the runs that estimated it; empty when none did.
    pub mean_qber: Option<f64>,
    pub mean_keylen: f64,
    pub eps_corr: f64,
    pub eps_secr: f64,
    pub eps_global: f64,
    pub wall_ms: u64,
}

pub fn summarize(config: &ScenarioConfig, rows: &[TrialRow], wall_ms: u64) -> CliResult<Summary> {
    let budget = declared_budget(config)?;
    let t = rows.len() as f64;
    let qbers: Vec<f64> = rows.iter().filter_map(|r| r.eta_hat).collect();
    let keylen = |r: &TrialRow| match r.rate {
        Some(rate) => rate.max(0.0) * r.sifted as f64,
        None => r.key_length as f64,
    };
    let eps_global = match config.mode {
        Mode::Qkd => budget.global(),
        Mode::Smt => rows.iter().map(|r| r.eps_global).fold(0.0, f64::max),
    };
    Ok(Summary {
        scenario: config.name.clone(),
        seed: config.seed,
        trials: rows.len(),
        abort_rate: rows.iter().filter(|r| r.abort).count() as f64 / t,
        mean_qber: (!qbers.is_empty()).then(|| qbers.iter().sum::<f64>() / qbers.len() as f64),
        mean_keylen: rows.iter().map(keylen).sum::<f64>() / t,
        eps_corr: budget.eps_corr,
        eps_secr: budget.eps_secr,
        eps_global,
        wall_ms,
    })
}
