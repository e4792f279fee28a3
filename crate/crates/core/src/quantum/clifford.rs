use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use super::matrix::{ComplexMatrix, ONE, ZERO};
use super::pauli::PauliIndex;
use crate::error::{Error, Result};

type Key = Vec<(i64, i64)>;

static ONE_QUBIT: OnceLock<Vec<ComplexMatrix>> = OnceLock::new();
static TWO_QUBIT: OnceLock<Vec<ComplexMatrix>> = OnceLock::new();

fn hadamard() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, -1.0]).scale(std::f64::consts::FRAC_1_SQRT_2)
}

fn phase_gate() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, 2, &[ONE, ZERO, ZERO, Complex64::new(0.0, 1.0)])
}

fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real(
        4,
        4,
        &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    )
}

/// Rescales `u` so its first non-negligible entry is real positive.
fn canonical(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.rows();
    for i in 0..d * d {
        let z = u.get(i / d, i % d);
        if z.norm() > 1e-6 {
            return u.scale_complex(z.conj() / z.norm());
        }
    }
    u.clone()
}

fn key(u: &ComplexMatrix) -> Key {
    let d = u.rows();
    (0..d * d)
        .map(|i| {
            let z = u.get(i / d, i % d);
            ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64)
        })
        .collect()
}

/// Closure of the generators under multiplication, modulo global phase.
fn generate(gens: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let d = gens[0].rows();
    let id = ComplexMatrix::identity(d);
    let mut seen: HashMap<Key, usize> = HashMap::new();
    let mut elements = vec![id.clone()];
    seen.insert(key(&id), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in gens {
            let next = canonical(&(g * &elements[i]));
            let k = key(&next);
            if !seen.contains_key(&k) {
                seen.insert(k, elements.len());
                queue.push_back(elements.len());
                elements.push(next);
            }
        }
    }
    elements
}

/// The n-qubit Clifford group modulo global phase (n ≤ 2), generated from
/// H, S and CNOT. Cached after the first call.
pub fn clifford_group(n: usize) -> Result<&'static [ComplexMatrix]> {
    match n {
        1 => Ok(ONE_QUBIT.get_or_init(|| generate(&[hadamard(), phase_gate()]))),
        2 => Ok(TWO_QUBIT.get_or_init(|| {
            let i = ComplexMatrix::identity(2);
            generate(&[
                hadamard().kron(&i),
                i.kron(&hadamard()),
                phase_gate().kron(&i),
                i.kron(&phase_gate()),
                cnot(),
            ])
        })),
        _ => Err(Error::UnsupportedSize(format!("Clifford enumeration supports 1 or 2 qubits, got {n}"))),
    }
}

/// Index of a uniformly random element of [`clifford_group`].
pub fn random_clifford_index<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<usize> {
    let g = clifford_group(n)?;
    Ok(rng.random_range(0..g.len()))
}

/// Uniformly random n-qubit Clifford unitary (n ∈ {1, 2}).
pub fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let i = random_clifford_index(n, rng)?;
    Ok(clifford_group(n)?[i].clone())
}

/// Returns (Q, c) with M = c·Q for a phase c ∈ {±1, ±i}, if M is a scaled Pauli.
pub fn as_pauli(m: &ComplexMatrix, n: usize) -> Option<(PauliIndex, Complex64)> {
    let d = 1usize << n;
    if m.rows() != d {
        return None;
    }
    // Column 0 has a single nonzero entry at row x.
    let x_index = (0..d).find(|&r| m.get(r, 0).norm() > 1e-6)?;
    for z_index in 0..d {
        let bits = (x_index << n) | z_index;
        let p = PauliIndex::from_index(n, bits);
        let pm = p.matrix();
        let c = m.get(x_index, 0) / pm.get(x_index, 0);
        if pm.scale_complex(c).approx_eq(m, 1e-6) {
            return Some((p, c));
        }
    }
    None
}

/// U P U† stays in the Pauli group for every Pauli P.
pub fn is_clifford(u: &ComplexMatrix, n: usize) -> bool {
    PauliIndex::all(n).all(|p| as_pauli(&p.matrix().conjugate_by(u), n).is_some())
}
