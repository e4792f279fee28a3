use std::collections::HashMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Interface, Observation, Port, Res, Resource, State, Value};
use crate::error::{Error, Result};
use crate::quantum::{measure, ComplexMatrix, DensityOperator, Povm};

/// Default limit on explored interaction nodes.
pub const DEFAULT_NODE_CAP: usize = 1 << 20;
/// Largest total quantum output a branch may accumulate in exact mode.
pub const MAX_QUANTUM_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdvantageMode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub value: f64,
    pub mode: AdvantageMode,
    /// Hoeffding radius at confidence 0.99 (Monte-Carlo only).
    pub radius: Option<f64>,
    /// Success probability of the optimal guesser with equal priors, evaluated
    /// directly rather than as ½ + value/2 (exact only).
    pub guess_probability: Option<f64>,
    pub nodes: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    /// Maximum number of inputs the distinguisher may send.
    pub depth: usize,
    pub node_cap: usize,
    pub extract_strategy: bool,
}

impl ExactOptions {
    pub fn new(depth: usize) -> Self {
        Self { depth, node_cap: DEFAULT_NODE_CAP, extract_strategy: false }
    }
}

type ObsKey = Vec<(Port, Observation)>;

/// Final decision at a leaf of an optimal strategy; outcome 0 means "first system".
#[derive(Clone, Debug)]
pub enum LeafRule {
    Classical(u8),
    Helstrom(ComplexMatrix),
}

/// Adaptive distinguisher: send an input, branch on the classical outputs.
#[derive(Clone, Debug)]
pub enum StrategyTree {
    Leaf(LeafRule),
    Act { port: Port, input: Value, children: Vec<(ObsKey, StrategyTree)> },
}

#[derive(Clone, Debug)]
struct Branch {
    prob: f64,
    state: State,
    quantum: Vec<DensityOperator>,
}

struct Explorer<'a> {
    r: &'a dyn Resource,
    s: &'a dyn Resource,
    actions: Vec<(Port, Value)>,
    nodes: usize,
    opts: ExactOptions,
}

struct NodeValue {
    adv: f64,
    guess: f64,
    tree: Option<StrategyTree>,
}

fn tensor_all(states: &[DensityOperator]) -> Option<ComplexMatrix> {
    let mut it = states.iter();
    let first = it.next()?.matrix().clone();
    Some(it.fold(first, |acc, s| acc.kron(s.matrix())))
}

fn merge(branches: Vec<Branch>) -> Vec<Branch> {
    if branches.len() > 512 {
        return branches;
    }
    let mut out: Vec<Branch> = Vec::with_capacity(branches.len());
    for b in branches {
        match out.iter_mut().find(|o| o.state == b.state && o.quantum == b.quantum) {
            Some(o) => o.prob += b.prob,
            None => out.push(b),
        }
    }
    out
}

impl Explorer<'_> {
    fn leaf(&self, r: &[Branch], s: &[Branch], extract: bool) -> NodeValue {
        let pr: f64 = r.iter().map(|b| b.prob).sum();
        let ps: f64 = s.iter().map(|b| b.prob).sum();
        let quantum = r.iter().chain(s).any(|b| !b.quantum.is_empty());
        if !quantum {
            let rule = LeafRule::Classical(if pr > ps { 0 } else { 1 });
            return NodeValue {
                adv: 0.5 * (pr - ps).abs(),
                guess: 0.5 * pr.max(ps),
                tree: extract.then_some(StrategyTree::Leaf(rule)),
            };
        }
        let sum = |bs: &[Branch], d: usize| {
            bs.iter().fold(ComplexMatrix::zeros(d, d), |acc, b| {
                &acc + &tensor_all(&b.quantum).map_or_else(|| ComplexMatrix::zeros(d, d), |m| m.scale(b.prob))
            })
        };
        let d = r
            .iter()
            .chain(s)
            .find_map(|b| tensor_all(&b.quantum))
            .map_or(1, |m| m.rows());
        let diff = &sum(r, d) - &sum(s, d);
        let eig = diff.hermitian_eigenvalues();
        let positive: f64 = eig.iter().filter(|v| **v > 0.0).sum();
        let rule = LeafRule::Helstrom(diff.positive_projector(1e-12));
        NodeValue {
            adv: 0.5 * eig.iter().map(|v| v.abs()).sum::<f64>(),
            guess: 0.5 * (ps + positive),
            tree: extract.then_some(StrategyTree::Leaf(rule)),
        }
    }

    fn advance(&self, res: &dyn Resource, branches: &[Branch], port: Port, input: &Value, noop: &mut bool, groups: &mut HashMap<ObsKey, (Vec<Branch>, Vec<Branch>)>, left: bool) -> Result<()> {
        for b in branches {
            for t in res.step(&b.state, port, input)? {
                if t.prob <= 0.0 {
                    continue;
                }
                if !t.outputs.is_empty() || t.next != b.state {
                    *noop = false;
                }
                // Outputs of one activation are unordered across ports.
                let mut outputs = t.outputs.clone();
                outputs.sort_by_key(|(p, _)| *p);
                let key: ObsKey = outputs.iter().map(|(p, v)| (*p, v.observation())).collect();
                let mut quantum = b.quantum.clone();
                for (_, v) in &outputs {
                    if let Value::Quantum(rho) = v {
                        quantum.push(rho.clone());
                    }
                }
                let qubits: usize = quantum.iter().map(|q| q.qubits()).sum();
                if qubits > MAX_QUANTUM_QUBITS {
                    return Err(Error::UnsupportedSize(format!("{qubits} quantum output qubits exceed {MAX_QUANTUM_QUBITS}")));
                }
                let entry = groups.entry(key).or_default();
                let target = if left { &mut entry.0 } else { &mut entry.1 };
                target.push(Branch { prob: b.prob * t.prob, state: t.next, quantum });
            }
        }
        Ok(())
    }

    fn explore(&mut self, r: Vec<Branch>, s: Vec<Branch>, depth: usize) -> Result<NodeValue> {
        self.nodes += 1;
        if self.nodes > self.opts.node_cap {
            return Err(Error::EnumerationCap(self.opts.node_cap));
        }
        let extract = self.opts.extract_strategy;
        let mut best = self.leaf(&r, &s, extract);
        if depth == 0 {
            return Ok(best);
        }
        for a in 0..self.actions.len() {
            let (port, input) = self.actions[a].clone();
            let mut groups: HashMap<ObsKey, (Vec<Branch>, Vec<Branch>)> = HashMap::new();
            let mut noop = true;
            self.advance(self.r, &r, port, &input, &mut noop, &mut groups, true)?;
            self.advance(self.s, &s, port, &input, &mut noop, &mut groups, false)?;
            if noop {
                continue;
            }
            let mut keys: Vec<ObsKey> = groups.keys().cloned().collect();
            keys.sort();
            let (mut adv, mut guess) = (0.0, 0.0);
            let mut children = Vec::new();
            for key in keys {
                let (gr, gs) = groups.remove(&key).unwrap_or_default();
                let child = self.explore(merge(gr), merge(gs), depth - 1)?;
                adv += child.adv;
                guess += child.guess;
                if let Some(t) = child.tree {
                    children.push((key, t));
                }
            }
            if adv > best.adv + 1e-13 {
                let tree = extract.then_some(StrategyTree::Act { port, input, children });
                best = NodeValue { adv, guess, tree };
            }
        }
        Ok(best)
    }
}

fn check_schemas(r: &dyn Resource, s: &dyn Resource) -> Result<Vec<(Port, Value)>> {
    let (a, b) = (r.schema(), s.schema());
    let mut actions = Vec::new();
    for iface in Interface::ALL {
        if a.ports(iface) != b.ports(iface) {
            return Err(Error::SchemaMismatch(format!(
                "{iface:?} ports differ: {:?} vs {:?}",
                a.names(iface),
                b.names(iface)
            )));
        }
        for (i, p) in a.ports(iface).iter().enumerate() {
            actions.extend(p.alphabet.iter().map(|v| (Port::new(iface, i), v.clone())));
        }
    }
    Ok(actions)
}

fn initial(res: &dyn Resource) -> Vec<Branch> {
    merge(
        res.init()
            .into_iter()
            .filter(|(p, _)| *p > 0.0)
            .map(|(prob, state)| Branch { prob, state, quantum: Vec::new() })
            .collect(),
    )
}

/// Best advantage over adaptive distinguishers sending at most `depth`
/// inputs, with the optimal strategy when requested.
pub fn advantage_exact_with(r: &Res, s: &Res, opts: ExactOptions) -> Result<(AdvantageReport, Option<StrategyTree>)> {
    let actions = check_schemas(r.as_ref(), s.as_ref())?;
    let mut ex = Explorer { r: r.as_ref(), s: s.as_ref(), actions, nodes: 0, opts };
    let v = ex.explore(initial(r.as_ref()), initial(s.as_ref()), opts.depth)?;
    let report = AdvantageReport {
        value: v.adv.clamp(0.0, 1.0),
        mode: AdvantageMode::Exact,
        radius: None,
        guess_probability: Some(v.guess),
        nodes: ex.nodes,
    };
    Ok((report, v.tree))
}

pub fn advantage_exact(r: &Res, s: &Res, depth: usize) -> Result<AdvantageReport> {
    Ok(advantage_exact_with(r, s, ExactOptions::new(depth))?.0)
}

/// A sampled run of a resource driven one input at a time.
pub struct Interaction<'a> {
    res: &'a dyn Resource,
    state: State,
    transcript: Vec<(Port, Value)>,
}

fn sample_index<R: Rng + ?Sized>(probs: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = probs.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        if u < p {
            return i;
        }
        u -= p;
    }
    last
}

impl<'a> Interaction<'a> {
    pub fn new<R: Rng + ?Sized>(res: &'a dyn Resource, rng: &mut R) -> Self {
        let mut init = res.init();
        let i = sample_index(init.iter().map(|(p, _)| *p), rng);
        Self { res, state: init.swap_remove(i).1, transcript: Vec::new() }
    }

    /// Outputs come back sorted by port.
    pub fn send<R: Rng + ?Sized>(&mut self, port: Port, input: &Value, rng: &mut R) -> Result<Vec<(Port, Value)>> {
        let mut ts = self.res.step(&self.state, port, input)?;
        if ts.is_empty() {
            return Ok(Vec::new());
        }
        let i = sample_index(ts.iter().map(|t| t.prob), rng);
        let mut t = ts.swap_remove(i);
        t.outputs.sort_by_key(|(p, _)| *p);
        self.state = t.next;
        self.transcript.extend(t.outputs.iter().cloned());
        Ok(t.outputs)
    }

    pub fn transcript(&self) -> &[(Port, Value)] {
        &self.transcript
    }

    pub fn state(&self) -> &State {
        &self.state
    }
}

/// Strategy interacting with a system and outputting a bit.
pub trait Distinguisher: Send + Sync {
    fn distinguish(&self, sys: &mut Interaction<'_>, rng: &mut dyn RngCore) -> Result<u8>;
}

impl Distinguisher for StrategyTree {
    fn distinguish(&self, sys: &mut Interaction<'_>, rng: &mut dyn RngCore) -> Result<u8> {
        let mut node = self;
        loop {
            match node {
                StrategyTree::Leaf(LeafRule::Classical(bit)) => return Ok(*bit),
                StrategyTree::Leaf(LeafRule::Helstrom(m)) => {
                    let states: Vec<DensityOperator> = sys
                        .transcript()
                        .iter()
                        .filter_map(|(_, v)| match v {
                            Value::Quantum(rho) => Some(rho.clone()),
                            _ => None,
                        })
                        .collect();
                    let Some(joint) = tensor_all(&states) else { return Ok(0) };
                    let rho = DensityOperator::from_matrix_unchecked(joint);
                    let povm = Povm::binary(m.clone())?;
                    return Ok(measure(&rho, &povm, rng)?.0 as u8);
                }
                StrategyTree::Act { port, input, children } => {
                    let out = sys.send(*port, input, rng)?;
                    let key: ObsKey = out.iter().map(|(p, v)| (*p, v.observation())).collect();
                    match children.iter().find(|(k, _)| *k == key) {
                        Some((_, child)) => node = child,
                        None => return Ok(1),
                    }
                }
            }
        }
    }
}

/// |freq(D=0 | r) − freq(D=0 | s)| with radius √(ln(2/α)/2·(1/n_r + 1/n_s)), α = 0.01.
pub fn advantage_mc(r: &Res, s: &Res, d: &dyn Distinguisher, trials: usize, rng: &mut dyn RngCore) -> Result<AdvantageReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let mut zeros = [0usize; 2];
    for (slot, res) in [r, s].into_iter().enumerate() {
        for _ in 0..trials {
            let mut sys = Interaction::new(res.as_ref(), rng);
            if d.distinguish(&mut sys, rng)? == 0 {
                zeros[slot] += 1;
            }
        }
    }
    let n = trials as f64;
    let value = (zeros[0] as f64 / n - zeros[1] as f64 / n).abs();
    let alpha: f64 = 0.01;
    let radius = ((2.0 / alpha).ln() / 2.0 * (2.0 / n)).sqrt();
    Ok(AdvantageReport { value, mode: AdvantageMode::MonteCarlo, radius: Some(radius), guess_probability: None, nodes: 0 })
}
