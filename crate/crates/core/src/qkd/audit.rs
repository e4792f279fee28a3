//! Exact security audit of the protocol at tiny sizes. Every random choice is
//! enumerated: the channel's behaviour in each round, the public Toeplitz seed
//! and the verification hash key. Eve's view is classical.
//!
//! Rounds are i.i.d., so the sampled rounds are independent of the key rounds
//! and parameter estimation enters as a single acceptance probability.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::channel::{round_outcomes, Scenario};
use crate::ac::resources::{secret_key, KeyVariant};
use crate::ac::simulators::qkd_simulator;
use crate::ac::{advantage_exact, attach, Interface, Port, PortSpec, Res, Resource, Schema, State, Transition, Value};
use crate::bits::from_u64;
use crate::error::{Error, Result};
use crate::gf::{to_blocks, Gf2m};
use crate::postprocessing::{CodingScheme, ToeplitzSeed};

/// Largest sifted length the audit accepts.
pub const MAX_AUDIT_BITS: usize = 10;
/// Largest key length the audit accepts.
pub const MAX_AUDIT_KEY: usize = 4;
/// Bound on (key-round outcomes) × (seeds) × (hash keys).
pub const AUDIT_CAP: usize = 1 << 24;
/// The composed-system cross-check runs when the joint table has at most this
/// many entries.
pub const SIM_CHECK_BRANCHES: usize = 4096;

const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyParams {
    /// Sifted bits.
    pub n: usize,
    /// Sampled for parameter estimation.
    pub s: usize,
    pub eta0: f64,
    /// Syndrome bits over the whole key block; 0 skips reconciliation.
    pub ir_bits: usize,
    pub ir_max_weight: usize,
    pub code_seed: u64,
    /// Verification tag bits, 0 or 4.
    pub tag_bits: u32,
    /// Final key length ℓ.
    pub key_length: usize,
    /// Declared reconciliation failure, the correctness claim when there is
    /// no verification.
    pub eps_ec: f64,
    /// Declared secrecy; the leftover-hash bound is used when absent.
    pub target_secr: Option<f64>,
}

impl TinyParams {
    fn m(&self) -> usize {
        self.n - self.s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidParameter { field, reason });
        if self.n == 0 || self.n > MAX_AUDIT_BITS {
            return bad("n", format!("{} not in 1..={MAX_AUDIT_BITS}", self.n));
        }
        if self.s >= self.n {
            return bad("s", format!("{} leaves no key bits out of {}", self.s, self.n));
        }
        if self.key_length == 0 || self.key_length > MAX_AUDIT_KEY.min(self.m()) {
            return bad("key_length", format!("{} not in 1..={}", self.key_length, MAX_AUDIT_KEY.min(self.m())));
        }
        if self.ir_bits > self.m() {
            return bad("ir_bits", format!("{} exceeds {} key bits", self.ir_bits, self.m()));
        }
        if ![0, 4].contains(&self.tag_bits) {
            return bad("tag_bits", format!("{} not in {{0, 4}}", self.tag_bits));
        }
        if !(0.0..=1.0).contains(&self.eta0) {
            return bad("eta0", format!("{} not in [0, 1]", self.eta0));
        }
        Ok(())
    }
}

/// Exact results of one audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Pr[K_A ≠ K_B and no abort].
    pub eps_corr: f64,
    /// (1 − p⊥)·D(ρ_{K_A E}, τ_K ⊗ ρ_E) on the accepted branch.
    pub eps_secr: f64,
    /// (1 − p⊥)·D(ρ_{K_A K_B E}, τ_{K_A K_B} ⊗ ρ_E) on the accepted branch.
    pub eps_global: f64,
    /// Distance of Alice and Bob's outputs from a key that aborts with the
    /// same probability.
    pub completeness: f64,
    pub p_abort: f64,
    /// Acceptance probability of parameter estimation.
    pub p_pe: f64,
    /// Min-entropy of the key rounds given Eve's per-round records.
    pub hmin: f64,
    pub claimed_corr: f64,
    pub claimed_secr: f64,
    /// Advantage between the real table system and key + simulator, when small
    /// enough to compute.
    pub sim_advantage: Option<f64>,
    /// Enumerated branches.
    pub branches: usize,
}

impl AuditReport {
    /// ε_global ≤ ε_corr + ε_secr.
    pub fn theorem_holds(&self) -> bool {
        self.eps_global <= self.eps_corr + self.eps_secr + TOL
    }

    /// Completeness bounded by soundness.
    pub fn robustness_holds(&self) -> bool {
        self.completeness <= self.eps_global + TOL
    }

    pub fn claims_hold(&self) -> bool {
        self.eps_corr <= self.claimed_corr + TOL && self.eps_secr <= self.claimed_secr + TOL
    }

    pub fn sim_matches(&self) -> bool {
        self.sim_advantage.is_none_or(|a| (a - self.eps_global).abs() <= 1e-9)
    }

    pub fn violation(&self) -> bool {
        !(self.theorem_holds() && self.robustness_holds() && self.claims_hold() && self.sim_matches())
    }
}

/// Per-round joint distribution of Alice's bit, Bob's bit and Eve's record
/// class, over basis-matched rounds.
struct RoundTable {
    /// (x, y, class, probability), positive entries only.
    entries: Vec<(u8, u8, u64, f64)>,
    classes: u64,
    error: f64,
    pguess: f64,
}

// Views with the same conditional distribution of (x, y) are merged; nothing
// computed here can tell them apart.
fn round_table(scenario: &Scenario) -> Result<RoundTable> {
    let channel = scenario.channel()?;
    let mut by_view: Vec<(Option<(u8, u8)>, u8, [f64; 4])> = Vec::new();
    for basis in 0..2u8 {
        for bit in 0..2u8 {
            for o in round_outcomes(&channel, bit, basis, basis)? {
                let key = o.eve.map(|e| (e.basis, e.outcome));
                let slot = match by_view.iter().position(|(k, b, _)| *k == key && *b == basis) {
                    Some(i) => i,
                    None => {
                        by_view.push((key, basis, [0.0; 4]));
                        by_view.len() - 1
                    }
                };
                by_view[slot].2[(bit << 1 | o.bob_bit) as usize] += 0.25 * o.prob;
            }
        }
    }
    let mut classes: Vec<([f64; 4], [f64; 4])> = Vec::new();
    for (_, _, joint) in by_view {
        let total: f64 = joint.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let cond = joint.map(|p| p / total);
        match classes.iter_mut().find(|(c, _)| c.iter().zip(&cond).all(|(a, b)| (a - b).abs() < 1e-12)) {
            Some((_, acc)) => acc.iter_mut().zip(&joint).for_each(|(a, p)| *a += p),
            None => classes.push((cond, joint)),
        }
    }
    let mut entries = Vec::new();
    let (mut error, mut pguess) = (0.0, 0.0);
    for (c, (_, joint)) in classes.iter().enumerate() {
        for (xy, &p) in joint.iter().enumerate() {
            if p > 0.0 {
                entries.push(((xy >> 1) as u8, (xy & 1) as u8, c as u64, p));
            }
            if xy == 1 || xy == 2 {
                error += p;
            }
        }
        pguess += (joint[0] + joint[1]).max(joint[2] + joint[3]);
    }
    Ok(RoundTable { entries, classes: classes.len() as u64, error, pguess })
}

/// Pr[at most ⌊η0·s⌋ errors among s rounds with error rate e].
fn pe_acceptance(s: usize, eta0: f64, e: f64) -> f64 {
    let threshold = ((eta0 * s as f64) + 1e-9).floor() as usize;
    let mut binom = 1.0;
    let mut total = 0.0;
    for j in 0..=threshold.min(s) {
        if j > 0 {
            binom *= (s - j + 1) as f64 / j as f64;
        }
        total += binom * e.powi(j as i32) * (1.0 - e).powi((s - j) as i32);
    }
    total.min(1.0)
}

/// One key-round outcome: packed x, y, class vector and probability.
struct Outcome {
    x: u64,
    y: u64,
    cls: u64,
    p: f64,
}

fn key_outcomes(table: &RoundTable, m: usize) -> Vec<Outcome> {
    let mut out = vec![Outcome { x: 0, y: 0, cls: 0, p: 1.0 }];
    for _ in 0..m {
        let mut next = Vec::with_capacity(out.len() * table.entries.len());
        for o in &out {
            for &(x, y, c, p) in &table.entries {
                next.push(Outcome { x: o.x << 1 | x as u64, y: o.y << 1 | y as u64, cls: o.cls * table.classes + c, p: o.p * p });
            }
        }
        out = next;
    }
    out
}

fn toeplitz_table(m: usize, l: usize, index: u64) -> Vec<u64> {
    let masks = ToeplitzSeed::from_index(m, l, index).row_masks();
    (0..1u64 << m)
        .map(|x| masks.iter().fold(0, |acc, r| acc << 1 | ((r & x).count_ones() & 1) as u64))
        .collect()
}

/// Exact ε_corr, ε_secr and ε_global of the protocol with `params` against
/// the attack in `scenario`, with the checks of [`AuditReport`].
pub fn exhaustive_audit(params: &TinyParams, scenario: &Scenario) -> Result<AuditReport> {
    Ok(audit_core(params, scenario, false)?.0)
}

/// The same audit with the protocol's keys replaced by the ideal key: uniform,
/// equal at both ends and independent of Eve's view, aborting exactly when the
/// protocol does. Every ε comes out 0.
pub fn ideal_audit(params: &TinyParams, scenario: &Scenario) -> Result<AuditReport> {
    Ok(audit_core(params, scenario, true)?.0)
}

/// The protocol of an audit as a resource, with the transcript distribution
/// its simulator needs.
pub struct KeySystem {
    /// A and B request `key`; E triggers `run` and sees a transcript symbol.
    pub real: Res,
    /// (probability, transcript, aborts) for [`qkd_simulator`].
    pub views: Vec<(f64, u64, bool)>,
    pub key_length: usize,
    pub eps_global: f64,
}

/// Builds the [`KeySystem`] of a configuration small enough for the
/// simulator cross-check.
pub fn key_system(params: &TinyParams, scenario: &Scenario) -> Result<KeySystem> {
    let (report, table) = audit_core(params, scenario, false)?;
    let (joint, accept) = table.ok_or(Error::EnumerationCap(report.branches))?;
    let (real, views) = table_system(joint, accept);
    Ok(KeySystem { real, views, key_length: params.key_length, eps_global: report.eps_global })
}

type JointTable = (Vec<(f64, u64, u64, u64)>, f64);

fn audit_core(params: &TinyParams, scenario: &Scenario, ideal: bool) -> Result<(AuditReport, Option<JointTable>)> {
    params.validate()?;
    let table = round_table(scenario)?;
    let m = params.m();
    let l = params.key_length;
    let seeds = 1u64 << (m + l - 1);
    let hash_keys = 1u64 << params.tag_bits;
    let branches = table.entries.len().pow(m as u32);
    let work = branches.saturating_mul(seeds as usize).saturating_mul(hash_keys as usize);
    if work > AUDIT_CAP {
        return Err(Error::EnumerationCap(work));
    }
    let p_pe = pe_acceptance(params.s, params.eta0, table.error);
    let outcomes = key_outcomes(&table, m);

    // Syndrome and Bob's estimate per outcome, independent of the seeds.
    let scheme = if params.ir_bits > 0 {
        Some(CodingScheme::random(m, params.ir_bits, params.code_seed, params.ir_max_weight)?)
    } else {
        None
    };
    let decoded: Vec<(u64, Option<u64>)> = outcomes
        .iter()
        .map(|o| match &scheme {
            None => (0, Some(o.y)),
            Some(s) => {
                let c = s.encode_word(o.x as u32);
                (c as u64, s.decode_word(c, o.y as u32).ok().map(u64::from))
            }
        })
        .collect();
    let tags: Vec<Vec<u64>> = if params.tag_bits > 0 {
        let f = Gf2m::standard(params.tag_bits)?;
        (0..hash_keys)
            .map(|k1| (0..1u64 << m).map(|x| f.poly_hash(&to_blocks(&from_u64(x, m), params.tag_bits), k1, 0)).collect())
            .collect()
    } else {
        vec![vec![0; 1 << m]]
    };

    let keys = 1usize << l;
    let u = 1.0 / keys as f64;
    let w = 1.0 / (seeds * hash_keys) as f64;
    let (mut corr, mut secr, mut global, mut pass) = (0.0, 0.0, 0.0, 0.0);
    let mut outputs = vec![0.0; keys * keys];
    let keep_table = branches.saturating_mul((seeds * hash_keys) as usize) <= SIM_CHECK_BRANCHES;
    let mut joint: Vec<(f64, u64, u64, u64)> = Vec::new();
    let mut view_ids: HashMap<(u64, u64, u64, u64, u64), u64> = HashMap::new();
    let mut views: HashMap<(u64, u64, u64), Vec<f64>> = HashMap::new();
    for seed in 0..seeds {
        let pa = toeplitz_table(m, l, seed);
        for (k1, g) in tags.iter().enumerate() {
            views.clear();
            for (o, &(c, xh)) in outcomes.iter().zip(&decoded) {
                let Some(xh) = xh.filter(|&xh| g[o.x as usize] == g[xh as usize]) else {
                    continue;
                };
                let (ka, kb) = (pa[o.x as usize] as usize, pa[xh as usize] as usize);
                views.entry((o.cls, c, g[o.x as usize])).or_insert_with(|| vec![0.0; keys * keys])[ka * keys + kb] += o.p;
            }
            for (view, cells) in views.iter_mut() {
                let pv: f64 = cells.iter().sum();
                if ideal {
                    for (i, c) in cells.iter_mut().enumerate() {
                        *c = if i / keys == i % keys { pv * u } else { 0.0 };
                    }
                }
                pass += w * pv;
                for (i, &c) in cells.iter().enumerate() {
                    outputs[i] += w * c;
                    if i / keys != i % keys {
                        corr += w * c;
                    }
                }
                for ka in 0..keys {
                    let row = &cells[ka * keys..(ka + 1) * keys];
                    secr += w * 0.5 * (row.iter().sum::<f64>() - pv * u).abs();
                    for (kb, &c) in row.iter().enumerate() {
                        let ideal = if ka == kb { pv * u } else { 0.0 };
                        global += w * 0.5 * (c - ideal).abs();
                    }
                }
                if keep_table {
                    let next = view_ids.len() as u64 + 1;
                    let id = *view_ids.entry((seed, k1 as u64, view.0, view.1, view.2)).or_insert(next);
                    for ka in 0..keys {
                        for kb in 0..keys {
                            if cells[ka * keys + kb] > 0.0 {
                                joint.push((p_pe * w * cells[ka * keys + kb], id, ka as u64, kb as u64));
                            }
                        }
                    }
                }
            }
        }
    }
    let mut completeness = 0.0;
    for ka in 0..keys {
        for kb in 0..keys {
            let ideal = if ka == kb { pass * u } else { 0.0 };
            completeness += 0.5 * (outputs[ka * keys + kb] - ideal).abs();
        }
    }

    let hmin = -(m as f64) * table.pguess.log2();
    let claimed_secr = params.target_secr.unwrap_or_else(|| {
        let deficit = l as f64 - (hmin - params.ir_bits as f64 - params.tag_bits as f64);
        p_pe * 0.5 * 2f64.powf(deficit / 2.0)
    });
    let claimed_corr = if params.tag_bits > 0 {
        p_pe * m.div_ceil(params.tag_bits as usize) as f64 / 2f64.powi(params.tag_bits as i32)
    } else {
        params.eps_ec
    };
    let eps_global = p_pe * global;
    let table = keep_table.then_some((joint, p_pe * pass));
    let sim_advantage = match &table {
        Some((joint, accept)) => Some(simulator_check(l, joint.clone(), *accept)?),
        None => None,
    };
    let report = AuditReport {
        eps_corr: p_pe * corr,
        eps_secr: p_pe * secr,
        eps_global,
        completeness: p_pe * completeness,
        p_abort: (1.0 - p_pe * pass).max(0.0),
        p_pe,
        hmin,
        claimed_corr,
        claimed_secr,
        sim_advantage,
        branches: branches * (seeds * hash_keys) as usize,
    };
    Ok((report, table))
}

const BOT: u64 = u64::MAX;
const FAIL_VIEW: u64 = 0;

/// The protocol as a system: Alice's and Bob's key requests wait until Eve
/// runs it; Eve then sees her view and both parties get their keys or ⊥.
struct KeyTable {
    /// (probability, view, k_A or BOT, k_B or BOT).
    joint: Vec<(f64, u64, u64, u64)>,
}

// State: [ran, k_A, k_B, A waiting, B waiting].
impl Resource for KeyTable {
    fn schema(&self) -> Schema {
        Schema::new(vec![PortSpec::trigger("key")], vec![PortSpec::trigger("key")], vec![PortSpec::trigger("run")])
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![0, BOT, BOT, 0, 0]))]
    }

    fn step(&self, state: &State, port: Port, _input: &Value) -> Result<Vec<Transition>> {
        let v = state.v();
        let key = |k: u64| if k == BOT { Value::Bot } else { Value::Sym(k) };
        match port.iface {
            Interface::A | Interface::B => {
                let a = port.iface == Interface::A;
                if v[0] == 0 {
                    let mut next = v.to_vec();
                    next[if a { 3 } else { 4 }] = 1;
                    return Ok(Transition::sure(vec![], State::vals(next)));
                }
                Ok(Transition::sure(vec![(port, key(if a { v[1] } else { v[2] }))], state.clone()))
            }
            Interface::E => {
                if v[0] == 1 {
                    return Ok(Transition::sure(vec![], state.clone()));
                }
                Ok(self
                    .joint
                    .iter()
                    .map(|&(p, view, ka, kb)| {
                        let mut out = vec![(Port::new(Interface::E, 0), Value::Sym(view))];
                        if v[3] == 1 {
                            out.push((Port::new(Interface::A, 0), key(ka)));
                        }
                        if v[4] == 1 {
                            out.push((Port::new(Interface::B, 0), key(kb)));
                        }
                        Transition::new(p, out, State::vals(vec![1, ka, kb, 0, 0]))
                    })
                    .collect())
            }
        }
    }
}

// Compares the real table against an Eve-switched key with the transcript
// simulator; all aborting views are one symbol since both systems output ⊥.
fn simulator_check(l: usize, joint: Vec<(f64, u64, u64, u64)>, accept: f64) -> Result<f64> {
    let (real, sim_views) = table_system(joint, accept);
    let ideal = attach(secret_key(l, KeyVariant::EveSwitch)?, qkd_simulator(sim_views)?, Interface::E)?;
    Ok(advantage_exact(&real, &ideal, 3)?.value)
}

fn table_system(mut joint: Vec<(f64, u64, u64, u64)>, accept: f64) -> (Res, Vec<(f64, u64, bool)>) {
    let fail = 1.0 - accept;
    let mut view_prob: HashMap<u64, f64> = HashMap::new();
    for &(p, id, ..) in &joint {
        *view_prob.entry(id).or_default() += p;
    }
    let mut sim_views: Vec<(f64, u64, bool)> = view_prob.into_iter().map(|(id, p)| (p, id, false)).collect();
    sim_views.sort_by_key(|v| v.1);
    if fail > 1e-15 {
        joint.push((fail, FAIL_VIEW, BOT, BOT));
        sim_views.push((fail, FAIL_VIEW, true));
    }
    let total: f64 = sim_views.iter().map(|v| v.0).sum();
    sim_views.iter_mut().for_each(|v| v.0 /= total);
    joint.iter_mut().for_each(|j| j.0 /= total);
    (Arc::new(KeyTable { joint }), sim_views)
}

/// A named audit configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditScenario {
    pub name: String,
    pub params: TinyParams,
    pub scenario: Scenario,
    /// The configuration is built to fail its claims.
    pub expect_violation: bool,
}

fn tiny(n: usize, s: usize, l: usize) -> TinyParams {
    TinyParams {
        n,
        s,
        eta0: 0.5,
        ir_bits: 0,
        ir_max_weight: 1,
        code_seed: 7,
        tag_bits: 0,
        key_length: l,
        eps_ec: 1e-3,
        target_secr: None,
    }
}

/// The bundled audit configurations, including one whose key is longer than
/// the min-entropy supports.
pub fn bundled_scenarios() -> Vec<AuditScenario> {
    let case = |name: &str, params, scenario, expect_violation| AuditScenario {
        name: name.into(),
        params,
        scenario,
        expect_violation,
    };
    vec![
        case("noiseless-skip-ec", tiny(6, 2, 2), Scenario::honest(0.0), false),
        case("noiseless-one-bit", tiny(4, 1, 1), Scenario::honest(0.0), false),
        case("noisy-verified", TinyParams { tag_bits: 4, ir_bits: 3, ..tiny(8, 2, 1) }, Scenario::honest(0.1), false),
        case("intercept-resend", TinyParams { tag_bits: 4, ..tiny(6, 2, 1) }, Scenario::intercept_resend(1.0), false),
        case(
            "partial-intercept-noisy",
            TinyParams { tag_bits: 4, ir_bits: 2, ..tiny(6, 2, 1) },
            Scenario { q: 0.05, attack: super::Attack::InterceptResend { f: 0.5 } },
            false,
        ),
        case(
            "over-long-pa",
            TinyParams { key_length: 4, tag_bits: 4, target_secr: Some(0.05), ..tiny(6, 2, 4) },
            Scenario::intercept_resend(1.0),
            true,
        ),
    ]
}
