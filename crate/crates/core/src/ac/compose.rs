use std::collections::VecDeque;
use std::sync::Arc;

use super::{Conv, ConvTransition, Converter, Interface, Port, PortSpec, Res, Resource, Schema, State, Transition, Value};
use crate::error::{Error, Result};

/// Internal messages processed per external input before giving up.
pub const MAX_EVENTS: usize = 10_000;

fn sort_outputs(mut out: Vec<(Port, Value)>) -> Vec<(Port, Value)> {
    out.sort_by_key(|(p, _)| *p);
    out
}

struct Attached {
    r: Res,
    c: Conv,
    at: Interface,
}

#[derive(Clone)]
enum Ev {
    ToR(Port, Value),
    ToC(usize, Value),
}

impl Attached {
    fn route_r(&self, outputs: Vec<(Port, Value)>, queue: &mut VecDeque<Ev>, out: &mut Vec<(Port, Value)>) {
        for (p, v) in outputs {
            if p.iface == self.at {
                queue.push_back(Ev::ToC(p.index, v));
            } else {
                out.push((p, v));
            }
        }
    }

    fn route_c(&self, t: &ConvTransition, queue: &mut VecDeque<Ev>, out: &mut Vec<(Port, Value)>) {
        out.extend(t.to_outer.iter().map(|(i, v)| (Port::new(self.at, *i), v.clone())));
        queue.extend(t.to_inner.iter().map(|(i, v)| Ev::ToR(Port::new(self.at, *i), v.clone())));
    }

    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        rs: State,
        cs: State,
        mut queue: VecDeque<Ev>,
        out: Vec<(Port, Value)>,
        prob: f64,
        events: usize,
        acc: &mut Vec<Transition>,
    ) -> Result<()> {
        if events > MAX_EVENTS {
            return Err(Error::EnumerationCap(MAX_EVENTS));
        }
        match queue.pop_front() {
            None => acc.push(Transition::new(prob, sort_outputs(out), State::pair(rs, cs))),
            Some(Ev::ToR(port, v)) => {
                for t in self.r.step(&rs, port, &v)? {
                    let (mut q, mut o) = (queue.clone(), out.clone());
                    self.route_r(t.outputs, &mut q, &mut o);
                    self.run(t.next, cs.clone(), q, o, prob * t.prob, events + 1, acc)?;
                }
            }
            Some(Ev::ToC(i, v)) => {
                for t in self.c.on_inner(&cs, i, &v)? {
                    let (mut q, mut o) = (queue.clone(), out.clone());
                    self.route_c(&t, &mut q, &mut o);
                    self.run(rs.clone(), t.next, q, o, prob * t.prob, events + 1, acc)?;
                }
            }
        }
        Ok(())
    }
}

impl Resource for Attached {
    fn schema(&self) -> Schema {
        let mut s = self.r.schema();
        s.set_ports(self.at, self.c.outer());
        s
    }

    fn init(&self) -> Vec<(f64, State)> {
        let cs = self.c.init();
        self.r
            .init()
            .into_iter()
            .flat_map(|(p, r)| cs.iter().map(move |(q, c)| (p * q, State::pair(r.clone(), c.clone()))))
            .collect()
    }

    fn step(&self, state: &State, port: Port, input: &Value) -> Result<Vec<Transition>> {
        let (rs, cs) = state.split();
        let mut acc = Vec::new();
        if port.iface == self.at {
            for t in self.c.on_outer(cs, port.index, input)? {
                let (mut q, mut o) = (VecDeque::new(), Vec::new());
                self.route_c(&t, &mut q, &mut o);
                self.run(rs.clone(), t.next, q, o, t.prob, 1, &mut acc)?;
            }
        } else {
            for t in self.r.step(rs, port, input)? {
                let (mut q, mut o) = (VecDeque::new(), Vec::new());
                self.route_r(t.outputs, &mut q, &mut o);
                self.run(t.next, cs.clone(), q, o, t.prob, 1, &mut acc)?;
            }
        }
        Ok(acc)
    }
}

/// Plugs converter `c` into interface `at` of `r`.
pub fn attach(r: Res, c: Conv, at: Interface) -> Result<Res> {
    let expected: Vec<String> = r.schema().names(at).into_iter().map(String::from).collect();
    let inner = c.inner();
    if expected != inner {
        return Err(Error::SchemaMismatch(format!(
            "converter expects {inner:?} at {at:?}, resource offers {expected:?}"
        )));
    }
    Ok(Arc::new(Attached { r, c, at }))
}

struct Parallel {
    r: Res,
    s: Res,
    offsets: [usize; 3],
}

impl Resource for Parallel {
    fn schema(&self) -> Schema {
        let (a, b) = (self.r.schema(), self.s.schema());
        let cat = |i: Interface| [a.ports(i), b.ports(i)].concat();
        Schema::new(cat(Interface::A), cat(Interface::B), cat(Interface::E))
    }

    fn init(&self) -> Vec<(f64, State)> {
        let ss = self.s.init();
        self.r
            .init()
            .into_iter()
            .flat_map(|(p, r)| ss.iter().map(move |(q, s)| (p * q, State::pair(r.clone(), s.clone()))))
            .collect()
    }

    fn step(&self, state: &State, port: Port, input: &Value) -> Result<Vec<Transition>> {
        let (rs, ss) = state.split();
        let off = self.offsets[port.iface as usize];
        if port.index < off {
            Ok(self
                .r
                .step(rs, port, input)?
                .into_iter()
                .map(|t| Transition::new(t.prob, t.outputs, State::pair(t.next, ss.clone())))
                .collect())
        } else {
            let inner = Port::new(port.iface, port.index - off);
            Ok(self
                .s
                .step(ss, inner, input)?
                .into_iter()
                .map(|t| {
                    let outputs = t
                        .outputs
                        .into_iter()
                        .map(|(p, v)| (Port::new(p.iface, p.index + self.offsets[p.iface as usize]), v))
                        .collect();
                    Transition::new(t.prob, sort_outputs(outputs), State::pair(rs.clone(), t.next))
                })
                .collect())
        }
    }
}

/// R ∥ S: ports of S follow those of R on every interface.
pub fn parallel(r: Res, s: Res) -> Res {
    let schema = r.schema();
    let offsets = Interface::ALL.map(|i| schema.ports(i).len());
    Arc::new(Parallel { r, s, offsets })
}

struct Identity {
    ports: Vec<PortSpec>,
}

impl Converter for Identity {
    fn inner(&self) -> Vec<String> {
        self.ports.iter().map(|p| p.name.clone()).collect()
    }

    fn outer(&self) -> Vec<PortSpec> {
        self.ports.clone()
    }

    fn init(&self) -> Vec<(f64, State)> {
        vec![(1.0, State::vals(vec![]))]
    }

    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![], vec![(port, input.clone())], state.clone()))
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        Ok(ConvTransition::sure(vec![(port, input.clone())], vec![], state.clone()))
    }
}

/// Converter forwarding every message unchanged.
pub fn identity_converter(ports: Vec<PortSpec>) -> Conv {
    Arc::new(Identity { ports })
}

struct Serial {
    outer: Conv,
    inner: Conv,
}

#[derive(Clone)]
enum SEv {
    ToOuterConv(usize, Value),
    ToInnerConv(usize, Value),
}

struct SerialAcc {
    to_outer: Vec<(usize, Value)>,
    to_inner: Vec<(usize, Value)>,
}

impl Serial {
    fn run(
        &self,
        os: State,
        is: State,
        mut queue: VecDeque<SEv>,
        acc_io: SerialAcc,
        prob: f64,
        events: usize,
        acc: &mut Vec<ConvTransition>,
    ) -> Result<()> {
        if events > MAX_EVENTS {
            return Err(Error::EnumerationCap(MAX_EVENTS));
        }
        match queue.pop_front() {
            None => acc.push(ConvTransition::new(prob, acc_io.to_outer, acc_io.to_inner, State::pair(os, is))),
            Some(SEv::ToOuterConv(i, v)) => {
                for t in self.outer.on_inner(&os, i, &v)? {
                    let mut q = queue.clone();
                    let mut io = SerialAcc { to_outer: acc_io.to_outer.clone(), to_inner: acc_io.to_inner.clone() };
                    io.to_outer.extend(t.to_outer.iter().cloned());
                    q.extend(t.to_inner.iter().map(|(j, w)| SEv::ToInnerConv(*j, w.clone())));
                    self.run(t.next, is.clone(), q, io, prob * t.prob, events + 1, acc)?;
                }
            }
            Some(SEv::ToInnerConv(i, v)) => {
                for t in self.inner.on_outer(&is, i, &v)? {
                    let mut q = queue.clone();
                    let mut io = SerialAcc { to_outer: acc_io.to_outer.clone(), to_inner: acc_io.to_inner.clone() };
                    io.to_inner.extend(t.to_inner.iter().cloned());
                    q.extend(t.to_outer.iter().map(|(j, w)| SEv::ToOuterConv(*j, w.clone())));
                    self.run(os.clone(), t.next, q, io, prob * t.prob, events + 1, acc)?;
                }
            }
        }
        Ok(())
    }
}

impl Converter for Serial {
    fn inner(&self) -> Vec<String> {
        self.inner.inner()
    }

    fn outer(&self) -> Vec<PortSpec> {
        self.outer.outer()
    }

    fn init(&self) -> Vec<(f64, State)> {
        let is = self.inner.init();
        self.outer
            .init()
            .into_iter()
            .flat_map(|(p, o)| is.iter().map(move |(q, i)| (p * q, State::pair(o.clone(), i.clone()))))
            .collect()
    }

    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let (os, is) = state.split();
        let mut acc = Vec::new();
        for t in self.outer.on_outer(os, port, input)? {
            let queue = t.to_inner.iter().map(|(j, w)| SEv::ToInnerConv(*j, w.clone())).collect();
            let io = SerialAcc { to_outer: t.to_outer.clone(), to_inner: vec![] };
            self.run(t.next, is.clone(), queue, io, t.prob, 1, &mut acc)?;
        }
        Ok(acc)
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let (os, is) = state.split();
        let mut acc = Vec::new();
        for t in self.inner.on_inner(is, port, input)? {
            let queue = t.to_outer.iter().map(|(j, w)| SEv::ToOuterConv(*j, w.clone())).collect();
            let io = SerialAcc { to_outer: vec![], to_inner: t.to_inner.clone() };
            self.run(os.clone(), t.next, queue, io, t.prob, 1, &mut acc)?;
        }
        Ok(acc)
    }
}

/// αβ: `inner` plugs into the resource and `outer` into `inner`'s outside.
pub fn serial(outer: Conv, inner: Conv) -> Result<Conv> {
    let offered: Vec<String> = inner.outer().into_iter().map(|p| p.name).collect();
    if outer.inner() != offered {
        return Err(Error::SchemaMismatch(format!(
            "outer converter expects {:?}, inner converter offers {offered:?}",
            outer.inner()
        )));
    }
    Ok(Arc::new(Serial { outer, inner }))
}

struct ParallelConv {
    left: Conv,
    right: Conv,
    inner_off: usize,
    outer_off: usize,
}

impl ParallelConv {
    fn lift(&self, t: ConvTransition, left: bool, other: &State) -> ConvTransition {
        let (io, oo) = if left { (0, 0) } else { (self.inner_off, self.outer_off) };
        let next = if left { State::pair(t.next, other.clone()) } else { State::pair(other.clone(), t.next) };
        ConvTransition::new(
            t.prob,
            t.to_outer.into_iter().map(|(i, v)| (i + oo, v)).collect(),
            t.to_inner.into_iter().map(|(i, v)| (i + io, v)).collect(),
            next,
        )
    }
}

impl Converter for ParallelConv {
    fn inner(&self) -> Vec<String> {
        [self.left.inner(), self.right.inner()].concat()
    }

    fn outer(&self) -> Vec<PortSpec> {
        [self.left.outer(), self.right.outer()].concat()
    }

    fn init(&self) -> Vec<(f64, State)> {
        let rs = self.right.init();
        self.left
            .init()
            .into_iter()
            .flat_map(|(p, l)| rs.iter().map(move |(q, r)| (p * q, State::pair(l.clone(), r.clone()))))
            .collect()
    }

    fn on_outer(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let (ls, rs) = state.split();
        if port < self.outer_off {
            Ok(self.left.on_outer(ls, port, input)?.into_iter().map(|t| self.lift(t, true, rs)).collect())
        } else {
            let ts = self.right.on_outer(rs, port - self.outer_off, input)?;
            Ok(ts.into_iter().map(|t| self.lift(t, false, ls)).collect())
        }
    }

    fn on_inner(&self, state: &State, port: usize, input: &Value) -> Result<Vec<ConvTransition>> {
        let (ls, rs) = state.split();
        if port < self.inner_off {
            Ok(self.left.on_inner(ls, port, input)?.into_iter().map(|t| self.lift(t, true, rs)).collect())
        } else {
            let ts = self.right.on_inner(rs, port - self.inner_off, input)?;
            Ok(ts.into_iter().map(|t| self.lift(t, false, ls)).collect())
        }
    }
}

/// α ∥ β acting on the two halves of R ∥ S.
pub fn parallel_converters(left: Conv, right: Conv) -> Conv {
    let inner_off = left.inner().len();
    let outer_off = left.outer().len();
    Arc::new(ParallelConv { left, right, inner_off, outer_off })
}
