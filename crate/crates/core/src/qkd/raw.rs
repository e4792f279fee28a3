//! Raw key distribution: prepare-and-measure, entanglement-based, and
//! entanglement-based with postponed measurement.

use rand::Rng;

use super::channel::Intercept;
use super::{EveKnowledge, PublicMessage, RoundRecord, SiftedKeys};
use crate::ac::{Interaction, Interface, Port, Res, Value};
use crate::error::{Error, Result};
use crate::metrics::Distribution;
use crate::quantum::{bb84_state, measure, partial_trace, tensor, ComplexMatrix, DensityOperator, Povm};

/// Default round cap as a multiple of the requested sifted length.
pub const ROUND_CAP_FACTOR: usize = 20;

/// Output of a raw-key subprotocol.
#[derive(Clone, Debug)]
pub struct RawKey {
    pub sifted: SiftedKeys,
    pub eve: EveKnowledge,
    pub rounds: Vec<RoundRecord>,
}

fn cap(n: usize, round_cap: Option<usize>) -> usize {
    round_cap.unwrap_or(ROUND_CAP_FACTOR * n.max(1))
}

fn finish(n: usize, rounds: Vec<RoundRecord>, intercepts: Vec<Option<Intercept>>) -> RawKey {
    let mut sifted = SiftedKeys::default();
    for (i, r) in rounds.iter().enumerate() {
        if let (true, Some(y)) = (r.alice_basis == r.bob_basis, r.bob_bit) {
            if sifted.x.len() < n {
                sifted.x.push(r.alice_bit);
                sifted.y.push(y);
                sifted.indices.push(i);
            }
        }
    }
    let bases = PublicMessage::Bases {
        alice: rounds.iter().map(|r| r.alice_basis).collect(),
        bob: rounds.iter().map(|r| r.bob_basis).collect(),
    };
    RawKey { sifted, eve: EveKnowledge { intercepts, transcript: vec![bases] }, rounds }
}

/// Prepare-and-measure: Alice sends φ_{X_i, B_i} through `channel`, Bob
/// measures in B′_i; rounds continue until `n` bases have matched.
pub fn raw_key_pm<R: Rng + ?Sized>(n: usize, channel: &Res, round_cap: Option<usize>, rng: &mut R) -> Result<RawKey> {
    let cap = cap(n, round_cap);
    let alphabet: Vec<Value> = (0..4).map(|i| Value::Quantum(bb84_state(i & 1, i >> 1).to_density())).collect();
    let povms = [Povm::bb84(0), Povm::bb84(1)];
    let (mut rounds, mut intercepts) = (Vec::new(), Vec::new());
    let mut matched = 0;
    while matched < n {
        if rounds.len() >= cap {
            return Err(Error::RoundCap(cap));
        }
        let (b, x, b2) = (rng.random_range(0..2u8), rng.random_range(0..2u8), rng.random_range(0..2u8));
        let mut sys = Interaction::new(channel.as_ref(), rng);
        let out = sys.send(Port::new(Interface::A, 0), &alphabet[(b << 1 | x) as usize], rng)?;
        let mut eve = None;
        let mut y = None;
        for (port, v) in &out {
            match (port.iface, v) {
                (Interface::B, Value::Quantum(rho)) => y = Some(measure(rho, &povms[b2 as usize], rng)?.0 as u8),
                (Interface::E, v) => eve = Intercept::from_value(v),
                _ => {}
            }
        }
        if b == b2 && y.is_some() {
            matched += 1;
        }
        rounds.push(RoundRecord { alice_basis: b, alice_bit: x, bob_basis: b2, bob_bit: y, eve });
        intercepts.push(eve);
    }
    Ok(finish(n, rounds, intercepts))
}

fn check_source(source: &DensityOperator) -> Result<()> {
    if source.qubits() != 2 {
        return Err(Error::DimensionMismatch { expected: 4, got: source.dim() });
    }
    Ok(())
}

/// Joint outcome distribution [P(0,0), P(0,1), P(1,0), P(1,1)] when Alice
/// measures qubit 0 in basis `a` and Bob measures qubit 1 in basis `b`.
pub fn pair_outcomes(source: &DensityOperator, a: u8, b: u8) -> Result<[f64; 4]> {
    check_source(source)?;
    let (pa, pb) = (Povm::bb84(a), Povm::bb84(b));
    let mut p = [0.0; 4];
    for x in 0..2 {
        for y in 0..2 {
            let m = pa.elements()[x].kron(&pb.elements()[y]);
            p[x << 1 | y] = m.trace_product(source.matrix()).re.max(0.0);
        }
    }
    Ok(p)
}

fn sample4<R: Rng + ?Sized>(p: &[f64; 4], rng: &mut R) -> usize {
    let mut u = rng.random::<f64>() * p.iter().sum::<f64>();
    for (i, &pi) in p.iter().enumerate() {
        if u < pi {
            return i;
        }
        u -= pi;
    }
    3
}

/// Entanglement-based: each round the source emits `source` on (Q̄_i, Q_i);
/// Alice measures Q̄_i in B_i, Bob measures Q_i in B′_i.
pub fn raw_key_eb<R: Rng + ?Sized>(n: usize, source: &DensityOperator, round_cap: Option<usize>, rng: &mut R) -> Result<RawKey> {
    check_source(source)?;
    let cap = cap(n, round_cap);
    let table: Vec<[f64; 4]> = (0..4).map(|i| pair_outcomes(source, i >> 1, i & 1)).collect::<Result<_>>()?;
    let mut rounds = Vec::new();
    let mut matched = 0;
    while matched < n {
        if rounds.len() >= cap {
            return Err(Error::RoundCap(cap));
        }
        let (b, b2) = (rng.random_range(0..2u8), rng.random_range(0..2u8));
        let o = sample4(&table[(b << 1 | b2) as usize], rng);
        matched += (b == b2) as usize;
        rounds.push(RoundRecord { alice_basis: b, alice_bit: (o >> 1) as u8, bob_basis: b2, bob_bit: Some(o as u8 & 1), eve: None });
    }
    let k = rounds.len();
    Ok(finish(n, rounds, vec![None; k]))
}

/// Entanglement-based with postponed measurement: all pairs are distributed
/// and the bases compared first; only the kept pairs are measured, jointly.
pub fn raw_key_postponed<R: Rng + ?Sized>(n: usize, source: &DensityOperator, round_cap: Option<usize>, rng: &mut R) -> Result<RawKey> {
    check_source(source)?;
    let cap = cap(n, round_cap);
    let mut bases = Vec::new();
    let mut kept = Vec::new();
    while kept.len() < n {
        if bases.len() >= cap {
            return Err(Error::RoundCap(cap));
        }
        let (b, b2) = (rng.random_range(0..2u8), rng.random_range(0..2u8));
        if b == b2 {
            kept.push(bases.len());
        }
        bases.push((b, b2));
    }
    // Bob's stored qubits: measure each kept pair on the joint register,
    // Alice first, then Bob on the post-measurement state.
    let mut outcomes = vec![(0u8, None); bases.len()];
    for &i in &kept {
        let (b, b2) = bases[i];
        let alice = Povm::bb84(b).on_qubit(0, 2)?;
        let (x, post) = measure(source, &alice, rng)?;
        let bob = Povm::bb84(b2).on_qubit(1, 2)?;
        let (y, _) = measure(&post, &bob, rng)?;
        outcomes[i] = (x as u8, Some(y as u8));
    }
    let rounds: Vec<RoundRecord> = bases
        .iter()
        .zip(outcomes)
        .map(|(&(b, b2), (x, y))| RoundRecord { alice_basis: b, alice_bit: x, bob_basis: b2, bob_bit: y, eve: None })
        .collect();
    let k = rounds.len();
    Ok(finish(n, rounds, vec![None; k]))
}

fn pack(x: usize, y: usize, n: usize) -> usize {
    x << n | y
}

/// Exact distribution of the sifted pair (X, Y) ∈ {0,1}^n × {0,1}^n of the
/// entanglement-based protocol, indexed X·2^n + Y (X_0 most significant).
/// Rounds are i.i.d. given a basis match, with the basis uniform.
pub fn eb_sifted_distribution(source: &DensityOperator, n: usize) -> Result<Distribution> {
    if n > 6 {
        return Err(Error::UnsupportedSize(format!("{n} sifted rounds")));
    }
    let per: Vec<f64> = {
        let (z, x) = (pair_outcomes(source, 0, 0)?, pair_outcomes(source, 1, 1)?);
        (0..4).map(|i| 0.5 * (z[i] + x[i])).collect()
    };
    let size = 1usize << (2 * n);
    let mut probs = vec![0.0; size];
    for (idx, p) in probs.iter_mut().enumerate() {
        let (x, y) = (idx >> n, idx & ((1 << n) - 1));
        *p = (0..n).map(|i| per[(((x >> (n - 1 - i)) & 1) << 1) | ((y >> (n - 1 - i)) & 1)]).product();
    }
    Distribution::new(probs)
}

/// The same distribution computed from the postponed-measurement picture: the
/// n kept pairs form the state source^⊗n, measured at once by the product
/// projectors for a uniformly random common basis string.
pub fn postponed_sifted_distribution(source: &DensityOperator, n: usize) -> Result<Distribution> {
    check_source(source)?;
    if n == 0 || n > 4 {
        return Err(Error::UnsupportedSize(format!("{n} stored pairs")));
    }
    let joint = (1..n).fold(source.clone(), |acc, _| tensor(&acc, source));
    let proj: Vec<Vec<ComplexMatrix>> = (0..2).map(|b| Povm::bb84(b).elements().to_vec()).collect();
    let mut probs = vec![0.0; 1 << (2 * n)];
    for bases in 0..1usize << n {
        for (idx, p) in probs.iter_mut().enumerate() {
            let (x, y) = (idx >> n, idx & ((1 << n) - 1));
            let mut m: Option<ComplexMatrix> = None;
            for i in 0..n {
                let b = (bases >> (n - 1 - i)) & 1;
                let f = proj[b][(x >> (n - 1 - i)) & 1].kron(&proj[b][(y >> (n - 1 - i)) & 1]);
                m = Some(match m {
                    None => f,
                    Some(acc) => acc.kron(&f),
                });
            }
            let m = m.expect("n ≥ 1");
            *p += m.trace_product(joint.matrix()).re.max(0.0) / (1usize << n) as f64;
        }
    }
    Distribution::from_weights(&probs)
}

/// Distribution of (X, Y) from recorded sifted keys, for comparison with the
/// exact ones.
pub fn sifted_index(keys: &SiftedKeys) -> usize {
    let n = keys.x.len();
    let x = keys.x.iter().fold(0, |a, &b| a << 1 | b as usize);
    let y = keys.y.iter().fold(0, |a, &b| a << 1 | b as usize);
    pack(x, y, n)
}

/// Classical-quantum state of (B_i, X_i, emitted Q_i): entry basis·2 + bit
/// holds (probability, state of Q_i). Prepare-and-measure picture.
pub fn pm_ccq() -> Vec<(f64, DensityOperator)> {
    (0..4).map(|i| (0.25, bb84_state(i & 1, i >> 1).to_density())).collect()
}

/// The same state in the entanglement-based picture: Alice measures Q̄_i of
/// `source` in B_i and Q_i is Bob's conditional state.
pub fn eb_ccq(source: &DensityOperator) -> Result<Vec<(f64, DensityOperator)>> {
    check_source(source)?;
    let mut out = Vec::new();
    for b in 0..2u8 {
        let alice = Povm::bb84(b).on_qubit(0, 2)?;
        for x in 0..2 {
            let post = alice.post_state_unnormalized(source, x);
            let p = post.trace().re;
            let cond = if p > 1e-15 {
                partial_trace(&DensityOperator::new(post.scale(1.0 / p))?, &[false, true])?
            } else {
                DensityOperator::maximally_mixed(1)
            };
            out.push((0.5 * p, cond));
        }
    }
    Ok(out)
}

/// Σ_i ½‖p_i ρ_i − q_i σ_i‖₁ for two ensembles over the same classical labels.
pub fn ccq_distance(a: &[(f64, DensityOperator)], b: &[(f64, DensityOperator)]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::AlphabetMismatch(a.len(), b.len()));
    }
    let mut d = 0.0;
    for ((p, r), (q, s)) in a.iter().zip(b) {
        d += 0.5 * (&r.matrix().scale(*p) - &s.matrix().scale(*q)).trace_norm();
    }
    Ok(d)
}
