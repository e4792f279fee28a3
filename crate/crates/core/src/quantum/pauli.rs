use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, ONE, ZERO};
use super::state::{DensityOperator, QubitMask};
use crate::error::{Error, Result};

/// Pauli operator Z^z X^x on n qubits, without the i^{z·x} phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliIndex {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl PauliIndex {
    pub fn new(x: Vec<bool>, z: Vec<bool>) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::LengthMismatch { expected: x.len(), got: z.len() });
        }
        Ok(Self { x, z })
    }

    pub fn identity(n: usize) -> Self {
        Self { x: vec![false; n], z: vec![false; n] }
    }

    /// Decodes `index` as x bits (high half) followed by z bits, qubit 0 first.
    pub fn from_index(n: usize, index: usize) -> Self {
        let bit = |k: usize| (index >> (2 * n - 1 - k)) & 1 == 1;
        Self { x: (0..n).map(bit).collect(), z: (n..2 * n).map(bit).collect() }
    }

    /// Inverse of [`PauliIndex::from_index`].
    pub fn to_index(&self) -> usize {
        self.x.iter().chain(&self.z).fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// All 4^n Pauli indices.
    pub fn all(n: usize) -> impl Iterator<Item = PauliIndex> {
        (0..1usize << (2 * n)).map(move |i| PauliIndex::from_index(n, i))
    }

    /// Builds from a 2n-bit key: first n bits are x, the next n bits are z.
    pub fn from_key_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() % 2 != 0 {
            return Err(Error::LengthMismatch { expected: bits.len() + 1, got: bits.len() });
        }
        let n = bits.len() / 2;
        Self::new(bits[..n].to_vec(), bits[n..].to_vec())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    /// Matrix of Z^z X^x.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(1);
        for q in 0..self.len() {
            let mut single = ComplexMatrix::identity(2);
            if self.x[q] {
                single = &single * &ComplexMatrix::from_rows(2, 2, &[ZERO, ONE, ONE, ZERO]);
            }
            if self.z[q] {
                single = &ComplexMatrix::diagonal(&[1.0, -1.0]) * &single;
            }
            m = m.kron(&single);
        }
        m
    }
}

/// Z^z X^x ρ X^x Z^z.
pub fn pauli_apply(rho: &DensityOperator, p: &PauliIndex) -> Result<DensityOperator> {
    if p.len() != rho.qubits() {
        return Err(Error::LengthMismatch { expected: rho.qubits(), got: p.len() });
    }
    rho.apply_unitary(&p.matrix())
}

/// Pauli acting on the qubits selected by `mask` and as identity elsewhere.
pub fn embed(p: &PauliIndex, mask: QubitMask<'_>) -> Result<PauliIndex> {
    let selected = mask.iter().filter(|&&b| b).count();
    if selected != p.len() {
        return Err(Error::LengthMismatch { expected: selected, got: p.len() });
    }
    let mut x = vec![false; mask.len()];
    let mut z = vec![false; mask.len()];
    for (k, q) in (0..mask.len()).filter(|&q| mask[q]).enumerate() {
        x[q] = p.x[k];
        z[q] = p.z[k];
    }
    Ok(PauliIndex { x, z })
}

/// Uniform average of Z^z X^x (·) X^x Z^z over every Pauli on the qubits in
/// `message`; equals τ_M ⊗ ρ_R.
pub fn pauli_twirl(rho: &DensityOperator, message: QubitMask<'_>) -> Result<DensityOperator> {
    if message.len() != rho.qubits() {
        return Err(Error::MaskMismatch { expected: rho.qubits(), got: message.len() });
    }
    let m = message.iter().filter(|&&b| b).count();
    let d = rho.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for p in PauliIndex::all(m) {
        let full = embed(&p, message)?;
        acc = &acc + &rho.matrix().conjugate_by(&full.matrix());
    }
    let scale = Complex64::new(1.0 / (1u64 << (2 * m)) as f64, 0.0);
    Ok(DensityOperator::from_matrix_unchecked(acc.scale_complex(scale).hermitian_part()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::state::{bb84_state, partial_trace, tensor, PureState};

    #[test]
    fn identity_pauli_is_noop() {
        let rho = bb84_state(1, 1).to_density();
        assert!(pauli_apply(&rho, &PauliIndex::identity(1)).unwrap().approx_eq(&rho, 1e-12));
    }

    #[test]
    fn x_flips_zero() {
        let x = PauliIndex::new(vec![true], vec![false]).unwrap();
        let out = pauli_apply(&DensityOperator::basis(1, 0), &x).unwrap();
        assert!(out.approx_eq(&DensityOperator::basis(1, 1), 1e-12));
    }

    #[test]
    fn z_maps_plus_to_minus() {
        let z = PauliIndex::new(vec![false], vec![true]).unwrap();
        let out = pauli_apply(&bb84_state(0, 1).to_density(), &z).unwrap();
        assert!(out.approx_eq(&bb84_state(1, 1).to_density(), 1e-12));
    }

    #[test]
    fn length_mismatch_rejected() {
        let p = PauliIndex::identity(2);
        assert!(pauli_apply(&DensityOperator::basis(1, 0), &p).is_err());
    }

    #[test]
    fn index_round_trip() {
        for i in 0..64 {
            assert_eq!(PauliIndex::from_index(3, i).to_index(), i);
        }
    }

    #[test]
    fn twirl_single_qubit_gives_mixed() {
        let rho = bb84_state(1, 1).to_density();
        let out = pauli_twirl(&rho, &[true]).unwrap();
        assert!(out.approx_eq(&DensityOperator::maximally_mixed(1), 1e-12));
    }

    #[test]
    fn twirl_bell_first_qubit_gives_product_of_mixed() {
        // Explicit four-term average over {I, X, Z, ZX} on the first qubit.
        let bell = PureState::bell().to_density();
        let mut acc = ComplexMatrix::zeros(4, 4);
        for (x, z) in [(false, false), (true, false), (false, true), (true, true)] {
            let p = PauliIndex::new(vec![x, false], vec![z, false]).unwrap();
            acc = &acc + pauli_apply(&bell, &p).unwrap().matrix();
        }
        let manual = acc.scale(0.25);
        let twirled = pauli_twirl(&bell, &[true, false]).unwrap();
        assert!(twirled.matrix().approx_eq(&manual, 1e-12));
        assert!(twirled.approx_eq(&DensityOperator::maximally_mixed(2), 1e-12));
    }

    #[test]
    fn twirl_keeps_reference_marginal() {
        let rho = tensor(&bb84_state(0, 1).to_density(), &bb84_state(1, 0).to_density());
        let out = pauli_twirl(&rho, &[true, false]).unwrap();
        let r = partial_trace(&out, &[false, true]).unwrap();
        assert!(r.approx_eq(&bb84_state(1, 0).to_density(), 1e-12));
    }
}
