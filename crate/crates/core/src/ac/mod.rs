//! Resources, converters and distinguishing advantage for small reactive
//! systems with interfaces A (Alice), B (Bob) and E (Eve).

mod advantage;
mod compose;
pub mod resources;
pub mod simulators;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quantum::DensityOperator;

pub use advantage::{
    advantage_exact, advantage_exact_with, advantage_mc, AdvantageMode, AdvantageReport, Distinguisher,
    ExactOptions, Interaction, StrategyTree, DEFAULT_NODE_CAP, MAX_QUANTUM_QUBITS,
};
pub use compose::{attach, identity_converter, parallel, parallel_converters, serial, MAX_EVENTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interface {
    A,
    B,
    E,
}

impl Interface {
    pub const ALL: [Interface; 3] = [Interface::A, Interface::B, Interface::E];

    fn slot(self) -> usize {
        self as usize
    }
}

/// Port `index` of interface `iface`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Port {
    pub iface: Interface,
    pub index: usize,
}

impl Port {
    pub fn new(iface: Interface, index: usize) -> Self {
        Self { iface, index }
    }
}

/// Message carried by a port.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Unit,
    Sym(u64),
    Bot,
    Quantum(DensityOperator),
}

impl Value {
    pub fn as_sym(&self) -> Option<u64> {
        match self {
            Value::Sym(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Value::Bot)
    }

    /// Classical content; quantum payloads are reduced to their size.
    pub fn observation(&self) -> Observation {
        match self {
            Value::Unit => Observation::Unit,
            Value::Sym(v) => Observation::Sym(*v),
            Value::Bot => Observation::Bot,
            Value::Quantum(rho) => Observation::Quantum(rho.qubits()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => write!(f, "()"),
            Value::Sym(v) => write!(f, "{v}"),
            Value::Bot => write!(f, "⊥"),
            Value::Quantum(rho) => write!(f, "<{} qubits>", rho.qubits()),
        }
    }
}

/// Hashable classical view of a [`Value`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observation {
    Unit,
    Sym(u64),
    Bot,
    Quantum(usize),
}

/// A named port and the inputs a distinguisher may send to it (empty for
/// output-only ports).
#[derive(Clone, Debug, PartialEq)]
pub struct PortSpec {
    pub name: String,
    pub alphabet: Vec<Value>,
}

impl PortSpec {
    pub fn new(name: impl Into<String>, alphabet: Vec<Value>) -> Self {
        Self { name: name.into(), alphabet }
    }

    pub fn output(name: impl Into<String>) -> Self {
        Self::new(name, Vec::new())
    }

    /// Input port accepting Sym(0)..Sym(size−1).
    pub fn symbols(name: impl Into<String>, size: u64) -> Self {
        Self::new(name, (0..size).map(Value::Sym).collect())
    }

    pub fn trigger(name: impl Into<String>) -> Self {
        Self::new(name, vec![Value::Unit])
    }
}

/// Ordered ports of each interface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schema {
    ports: [Vec<PortSpec>; 3],
}

impl Schema {
    pub fn new(a: Vec<PortSpec>, b: Vec<PortSpec>, e: Vec<PortSpec>) -> Self {
        Self { ports: [a, b, e] }
    }

    pub fn ports(&self, iface: Interface) -> &[PortSpec] {
        &self.ports[iface.slot()]
    }

    pub fn set_ports(&mut self, iface: Interface, ports: Vec<PortSpec>) {
        self.ports[iface.slot()] = ports;
    }

    pub fn names(&self, iface: Interface) -> Vec<&str> {
        self.ports(iface).iter().map(|p| p.name.as_str()).collect()
    }

    pub fn port(&self, iface: Interface, name: &str) -> Option<Port> {
        self.ports(iface).iter().position(|p| p.name == name).map(|i| Port::new(iface, i))
    }
}

/// Internal state of a resource or converter.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Leaf { vals: Vec<u64>, held: Vec<Value> },
    Pair(Box<State>, Box<State>),
}

impl State {
    pub fn vals(vals: Vec<u64>) -> Self {
        State::Leaf { vals, held: Vec::new() }
    }

    pub fn with_held(vals: Vec<u64>, held: Vec<Value>) -> Self {
        State::Leaf { vals, held }
    }

    pub fn pair(a: State, b: State) -> Self {
        State::Pair(Box::new(a), Box::new(b))
    }

    /// Classical registers of a leaf state (empty for pairs).
    pub fn v(&self) -> &[u64] {
        match self {
            State::Leaf { vals, .. } => vals,
            State::Pair(..) => &[],
        }
    }

    pub fn held(&self) -> &[Value] {
        match self {
            State::Leaf { held, .. } => held,
            State::Pair(..) => &[],
        }
    }

    pub fn split(&self) -> (&State, &State) {
        match self {
            State::Pair(a, b) => (a, b),
            State::Leaf { .. } => panic!("state is not a pair"),
        }
    }
}

/// One probabilistic branch of a resource step.
#[derive(Clone, Debug)]
pub struct Transition {
    pub prob: f64,
    pub outputs: Vec<(Port, Value)>,
    pub next: State,
}

impl Transition {
    pub fn new(prob: f64, outputs: Vec<(Port, Value)>, next: State) -> Self {
        Self { prob, outputs, next }
    }

    /// Probability-one step.
    pub fn sure(outputs: Vec<(Port, Value)>, next: State) -> Vec<Transition> {
        vec![Self::new(1.0, outputs, next)]
    }
}

/// Sequential reactive system: one input in, finitely many outputs out.
pub trait Resource: Send + Sync {
    fn schema(&self) -> Schema;
    /// Initial states with their probabilities; all randomness is explicit.
    fn init(&self) -> Vec<(f64, State)>;
    fn step(&self, state: &State, port: Port, input: &Value) -> Result<Vec<Transition>>;
}

pub type Res = Arc<dyn Resource>;

/// One probabilistic branch of a converter step. Inner indices refer to the
/// ports of the interface the converter is attached to.
#[derive(Clone, Debug)]
pub struct ConvTransition {
    pub prob: f64,
    pub to_outer: Vec<(usize, Value)>,
    pub to_inner: Vec<(usize, Value)>,
    pub next: State,
}

impl ConvTransition {
    pub fn new(prob: f64, to_outer: Vec<(usize, Value)>, to_inner: Vec<(usize, Value)>, next: State) -> Self {
        Self { prob, to_outer, to_inner, next }
    }

    pub fn sure(to_outer: Vec<(usize, Value)>, to_inner: Vec<(usize, Value)>, next: State) -> Vec<ConvTransition> {
        vec![Self::new(1.0, to_outer, to_inner, next)]
    }
}

/// System with an inside interface (plugged into a resource) and an outside one.
pub trait Converter: Send + Sync {
    /// Port names expected on the resource interface.
    fn inner(&self) -> Vec<String>;
    fn outer(&self) -> Vec<PortSpec>;
    fn init(&self) -> Vec<(f64, State)>;
    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>>;
    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>>;
}

pub type Conv = Arc<dyn Converter>;
