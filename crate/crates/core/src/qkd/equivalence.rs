//! From an entanglement-based protocol to a prepare-and-measure one: Alice's
//! measurement on her half of a source state is replaced by preparing Bob's
//! conditional state directly.

use std::sync::Arc;

use crate::ac::resources::{insecure_channel, InsecureKind};
use crate::ac::{
    attach, Conv, ConvTransition, Converter, Interface, Port, PortSpec, Res, Resource, Schema, State, Transition, Value,
};
use crate::error::{Error, Result};
use crate::quantum::{partial_trace, DensityOperator, Povm};

/// Alice's measurement: setting a is chosen with probability p_a and measured
/// with `povms[a]` on her qubit.
#[derive(Clone, Debug)]
pub struct MeasurementSpec {
    pub p_a: Vec<f64>,
    pub povms: Vec<Povm>,
}

impl MeasurementSpec {
    /// BB84: Z or X with probability ½ each.
    pub fn bb84() -> Self {
        Self { p_a: vec![0.5, 0.5], povms: vec![Povm::bb84(0), Povm::bb84(1)] }
    }

    fn outcomes(&self) -> usize {
        self.povms.iter().map(Povm::len).max().unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        if self.p_a.len() != self.povms.len() || self.p_a.is_empty() {
            return Err(Error::AlphabetMismatch(self.p_a.len(), self.povms.len()));
        }
        let total: f64 = self.p_a.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.p_a.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidDistribution(format!("setting probabilities sum to {total}")));
        }
        if let Some(p) = self.povms.iter().find(|p| p.dim() != 2) {
            return Err(Error::DimensionMismatch { expected: 2, got: p.dim() });
        }
        Ok(())
    }
}

/// One branch (a, x) of the conditional ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalState {
    pub setting: usize,
    pub outcome: usize,
    /// p_a · p_{x|a}.
    pub prob: f64,
    /// p_{x|a}.
    pub cond_prob: f64,
    /// φ^{x,a}_B.
    pub state: DensityOperator,
}

/// All branches with p_{x|a} > 0.
pub fn conditional_ensemble(alpha: &MeasurementSpec, rho_ab: &DensityOperator) -> Result<Vec<ConditionalState>> {
    alpha.validate()?;
    if rho_ab.qubits() != 2 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho_ab.dim() });
    }
    let mut out = Vec::new();
    for (a, povm) in alpha.povms.iter().enumerate() {
        let on_a = povm.on_qubit(0, 2)?;
        for x in 0..povm.len() {
            let post = on_a.post_state_unnormalized(rho_ab, x);
            let p = post.trace().re;
            if p <= 1e-12 {
                continue;
            }
            let state = partial_trace(&DensityOperator::new(post.scale(1.0 / p))?, &[false, true])?;
            out.push(ConditionalState { setting: a, outcome: x, prob: alpha.p_a[a] * p, cond_prob: p, state });
        }
    }
    Ok(out)
}

/// The converters of the reduction together with the data needed to build
/// the systems they act on.
pub struct EbToPm {
    /// Prepares φ^{x,a}_B directly; attaches at A of a quantum channel.
    pub gamma: Conv,
    /// Alice's measurement as a converter on the source's A interface.
    pub alpha: Conv,
    pub ensemble: Vec<ConditionalState>,
    pub rho_ab: DensityOperator,
    povms: Vec<Povm>,
}

/// Builds γ (and σ_E via [`EbToPm::sigma_e`]) for measurement `alpha` on source state `rho_ab`.
pub fn convert_eb_to_pm(alpha: &MeasurementSpec, rho_ab: &DensityOperator) -> Result<EbToPm> {
    let ensemble = conditional_ensemble(alpha, rho_ab)?;
    let outcomes = alpha.outcomes();
    let gamma = Arc::new(Gamma { branches: ensemble.clone(), outcomes });
    let alpha_conv = Arc::new(Alpha { p_a: alpha.p_a.clone(), outcomes });
    Ok(EbToPm {
        gamma,
        alpha: alpha_conv,
        rho_ab: rho_ab.clone(),
        povms: alpha.povms.clone(),
        ensemble,
    })
}

impl EbToPm {
    /// The distinct conditional states, the alphabet of the channel γ feeds.
    pub fn states(&self) -> Vec<DensityOperator> {
        let mut out: Vec<DensityOperator> = Vec::new();
        for c in &self.ensemble {
            if !out.contains(&c.state) {
                out.push(c.state.clone());
            }
        }
        out
    }

    /// σ_E: prepares ρ_AB inside the source and relays Bob's half and
    /// injections, so Eve sees the interface of an insecure channel.
    pub fn sigma_e(&self, inject: &[DensityOperator]) -> Conv {
        Arc::new(SourceSim { rho: self.rho_ab.clone(), inject: inject.to_vec() })
    }

    fn source(&self, inject: Option<Vec<DensityOperator>>) -> Res {
        let honest = inject.is_none().then_some(0);
        Arc::new(Source { states: vec![self.rho_ab.clone()], povms: self.povms.clone(), inject, honest })
    }

    /// γQ with Q an insecure quantum channel letting Eve inject any of `inject`.
    pub fn real_adversarial(&self, inject: &[DensityOperator]) -> Result<Res> {
        let q = insecure_channel(InsecureKind::Quantum { alphabet: self.states(), inject: inject.to_vec() })?;
        attach(q, self.gamma.clone(), Interface::A)
    }

    /// αEσ_E with E a source Eve controls.
    pub fn ideal_adversarial(&self, inject: &[DensityOperator]) -> Result<Res> {
        let e = self.source(Some(inject.to_vec()));
        let with_alpha = attach(e, self.alpha.clone(), Interface::A)?;
        attach(with_alpha, self.sigma_e(inject), Interface::E)
    }

    /// γQ′ with Q′ a noiseless channel and no Eve interface.
    pub fn real_honest(&self) -> Result<Res> {
        let q = insecure_channel(InsecureKind::Noisy { alphabet: self.states(), q: 0.0 })?;
        attach(q, self.gamma.clone(), Interface::A)
    }

    /// αE′ with E′ the honest source of ρ_AB.
    pub fn ideal_honest(&self) -> Result<Res> {
        attach(self.source(None), self.alpha.clone(), Interface::A)
    }
}

// Outer A ports: "go" (trigger) and "result" (a·K + x).
fn alice_outer() -> Vec<PortSpec> {
    vec![PortSpec::trigger("go"), PortSpec::output("result")]
}

struct Gamma {
    branches: Vec<ConditionalState>,
    outcomes: usize,
}

impl Converter for Gamma {
    fn inner(&self) -> Vec<String> {
        vec!["in".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        alice_outer()
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![0]))]
    }

    fn on_outer(&self, state: &State, port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        if port != 0 || state.v()[0] == 1 {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        Ok(self
            .branches
            .iter()
            .map(|c| {
                let label = Value::Sym((c.setting * self.outcomes + c.outcome) as u64);
                ConvTransition::new(c.prob, vec![(1, label)], vec![(0, Value::Quantum(c.state.clone()))], State::vals(vec![1]))
            })
            .collect())
    }

    fn on_inner(&self, state: &State, _port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }
}

struct Alpha {
    p_a: Vec<f64>,
    outcomes: usize,
}

// State: [started, setting].
impl Converter for Alpha {
    fn inner(&self) -> Vec<String> {
        vec!["measure".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        alice_outer()
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![0, 0]))]
    }

    fn on_outer(&self, state: &State, port: usize, _input: &Value) -> Result<Vec<ConvTransition>> {
        if port != 0 || state.v()[0] == 1 {
            return Ok(ConvTransition::sure(vec![], vec![], state.clone()));
        }
        Ok(self
            .p_a
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(a, &p)| ConvTransition::new(p, vec![], vec![(0, Value::Sym(a as u64))], State::vals(vec![1, a as u64])))
            .collect())
    }

    fn on_inner(&self, state: &State, _port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let x = input.as_sym().ok_or_else(|| Error::SchemaMismatch("measurement outcome expected".into()))?;
        let label = Value::Sym(state.v()[1] * self.outcomes as u64 + x);
        Ok(ConvTransition::sure(vec![(1, label)], vec![], state.clone()))
    }
}

/// Source of bipartite states with Alice's measurement device. Alice's port
/// "measure" takes a setting and returns the outcome; Bob's half goes to Bob
/// (honest) or to Eve, who decides what Bob receives (adversarial). In the
/// adversarial case the source asks Eve for the state on first use.
struct Source {
    states: Vec<DensityOperator>,
    povms: Vec<Povm>,
    inject: Option<Vec<DensityOperator>>,
    honest: Option<usize>,
}

const NONE: u64 = u64::MAX;

impl Source {
    fn measure(&self, rho: usize, a: usize, next: Vec<u64>) -> Result<Vec<Transition>> {
        let on_a = self.povms[a].on_qubit(0, 2)?;
        let mut out = Vec::new();
        for x in 0..self.povms[a].len() {
            let post = on_a.post_state_unnormalized(&self.states[rho], x);
            let p = post.trace().re;
            if p <= 1e-12 {
                continue;
            }
            let bob = partial_trace(&DensityOperator::new(post.scale(1.0 / p))?, &[false, true])?;
            let target = if self.honest.is_some() { Port::new(Interface::B, 0) } else { Port::new(Interface::E, 0) };
            let mut s = next.clone();
            s[1] = 1;
            if self.honest.is_some() {
                s[2] = 1;
            }
            out.push(Transition::new(
                p,
                vec![(Port::new(Interface::A, 0), Value::Sym(x as u64)), (target, Value::Quantum(bob))],
                State::vals(s),
            ));
        }
        Ok(out)
    }
}

// State: [prepared state index or NONE, measured, delivered, pending setting or NONE].
impl Resource for Source {
    fn schema(&self) -> Schema {
        let a = vec![PortSpec::symbols("measure", self.povms.len() as u64)];
        let b = vec![PortSpec::output("out")];
        let e = match &self.inject {
            None => vec![],
            Some(inj) => vec![
                PortSpec::output("read"),
                PortSpec::new("prepare", self.states.iter().cloned().map(Value::Quantum).collect()),
                PortSpec::new("inject", inj.iter().cloned().map(Value::Quantum).collect()),
            ],
        };
        Schema::new(a, b, e)
    }

    fn init(&self) -> Vec<(f64, State)> {
        let prepared = self.honest.map_or(NONE, |i| i as u64);
        vec![(1.0, State::vals(vec![prepared, 0, 0, NONE]))]
    }

    fn step(&self, state: &State, port: Port, input: &Value) -> Result<Vec<Transition>> {
        let v = state.v().to_vec();
        let same = || Ok(Transition::sure(vec![], state.clone()));
        match (port.iface, port.index) {
            (Interface::A, 0) => {
                let a = input.as_sym().ok_or_else(|| Error::SchemaMismatch("setting expected".into()))? as usize;
                if v[1] == 1 || v[3] != NONE {
                    return same();
                }
                if v[0] == NONE {
                    let mut next = v.clone();
                    next[3] = a as u64;
                    return Ok(Transition::sure(vec![(Port::new(Interface::E, 0), Value::Unit)], State::vals(next)));
                }
                self.measure(v[0] as usize, a, v)
            }
            (Interface::E, 1) => {
                if v[0] != NONE {
                    return same();
                }
                let idx = self.states.iter().position(|s| Value::Quantum(s.clone()) == *input);
                let idx = idx.ok_or_else(|| Error::SchemaMismatch("unknown source state".into()))?;
                let mut next = v.clone();
                next[0] = idx as u64;
                if v[3] != NONE {
                    next[3] = NONE;
                    return self.measure(idx, v[3] as usize, next);
                }
                Ok(Transition::sure(vec![], State::vals(next)))
            }
            (Interface::E, 2) => {
                if v[2] == 1 {
                    return same();
                }
                let mut next = v.clone();
                next[2] = 1;
                Ok(Transition::sure(vec![(Port::new(Interface::B, 0), input.clone())], State::vals(next)))
            }
            _ => same(),
        }
    }
}

struct SourceSim {
    rho: DensityOperator,
    inject: Vec<DensityOperator>,
}

impl Converter for SourceSim {
    fn inner(&self) -> Vec<String> {
        vec!["read".into(), "prepare".into(), "inject".into()]
    }

    fn outer(&self) -> Vec<PortSpec> {
        vec![PortSpec::output("read"), PortSpec::new("inject", self.inject.iter().cloned().map(Value::Quantum).collect())]
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![]))]
    }

    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        if port == 1 {
            return Ok(ConvTransition::sure(vec![], vec![(2, input.clone())], state.clone()));
        }
        Ok(ConvTransition::sure(vec![], vec![], state.clone()))
    }

    fn on_inner(&self, state: &State, _port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        match input {
            Value::Unit => Ok(ConvTransition::sure(vec![], vec![(1, Value::Quantum(self.rho.clone()))], state.clone())),
            other => Ok(ConvTransition::sure(vec![(0, other.clone())], vec![], state.clone())),
        }
    }
}
