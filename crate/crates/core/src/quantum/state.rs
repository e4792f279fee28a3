use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

/// Tolerance applied to every linear-algebra invariant.
pub const TOL: f64 = 1e-9;

/// Largest register the dense backend accepts.
pub const MAX_QUBITS: usize = 12;

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!("dimension {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::UnsupportedSize(format!("{n} qubits exceeds the {MAX_QUBITS}-qubit cap")));
    }
    Ok(n)
}

/// Unit-norm state vector on a register of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        qubits_for_dim(amplitudes.len())?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!("state vector norm {norm}")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes the given vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < TOL {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Computational basis state |index> on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << qubits];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    /// (|00> + |11>)/√2.
    pub fn bell() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amplitudes: vec![Complex64::new(h, 0.0), ZERO, ZERO, Complex64::new(h, 0.0)] }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            qubits: self.qubits(),
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }
}

/// BB84 encoding state φ_{x,b}: |x> when `basis` is 0, H|x> when `basis` is 1.
pub fn bb84_state(bit: u8, basis: u8) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amplitudes = match (bit & 1, basis & 1) {
        (0, 0) => vec![ONE, ZERO],
        (1, 0) => vec![ZERO, ONE],
        (0, _) => vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        _ => vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    };
    PureState { amplitudes }
}

/// Trace-one positive Hermitian operator on `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    qubits: usize,
    matrix: ComplexMatrix,
}

/// Register selection: `true` keeps the qubit. Qubit 0 is the most significant
/// tensor factor.
pub type QubitMask<'a> = &'a [bool];

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and positivity at [`TOL`].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        let qubits = qubits_for_dim(matrix.rows())?;
        let rho = Self { qubits, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Skips validation. The caller guarantees the invariants.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let qubits = matrix.rows().trailing_zeros() as usize;
        Self { qubits, matrix }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.matrix.is_hermitian(TOL) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Fully mixed state τ on `qubits` qubits.
    pub fn maximally_mixed(qubits: usize) -> Self {
        let d = 1usize << qubits;
        Self { qubits, matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64) }
    }

    /// |index><index|.
    pub fn basis(qubits: usize, index: usize) -> Self {
        PureState::basis(qubits, index).to_density()
    }

    /// Diagonal state with the given probabilities.
    pub fn classical(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diagonal(probs))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.hermitian_eigenvalues()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn is_pure(&self) -> bool {
        (self.purity() - 1.0).abs() < TOL
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        shannon_bits(&self.eigenvalues())
    }

    /// `U ρ U†`.
    pub fn apply_unitary(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.rows() });
        }
        Ok(Self { qubits: self.qubits, matrix: self.matrix.conjugate_by(u).hermitian_part() })
    }

    /// Population of computational basis state `index`.
    pub fn diagonal(&self, index: usize) -> f64 {
        self.matrix.get(index, index).re
    }

    /// Probabilities of the computational-basis outcomes.
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.diagonal(i).max(0.0)).collect()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.matrix.approx_eq(&other.matrix, tol)
    }
}

/// Kronecker product of two density operators.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    DensityOperator { qubits: a.qubits + b.qubits, matrix: a.matrix.kron(&b.matrix) }
}

/// Reduces `rho` to the qubits selected by `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: QubitMask<'_>) -> Result<DensityOperator> {
    let n = rho.qubits;
    if keep.len() != n {
        return Err(Error::MaskMismatch { expected: n, got: keep.len() });
    }
    let kept: Vec<usize> = (0..n).filter(|&q| keep[q]).collect();
    let traced: Vec<usize> = (0..n).filter(|&q| !keep[q]).collect();
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();

    // Builds the full index from (kept bits, traced bits); qubit 0 is the MSB.
    let compose = |k: usize, t: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            let bit = (k >> (kept.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (t >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        idx
    };

    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(dk, dk, |i, j| {
        (0..dt).map(|t| m.get(compose(i, t), compose(j, t))).sum()
    });
    Ok(DensityOperator { qubits: kept.len(), matrix: out })
}

/// Shannon entropy in bits of a probability vector; zero entries contribute 0.
pub fn shannon_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 1e-15).map(|&x| -x * x.log2()).sum()
}

/// Mask keeping exactly the listed qubits.
pub fn mask_keeping(qubits: usize, keep: &[usize]) -> Vec<bool> {
    (0..qubits).map(|q| keep.contains(&q)).collect()
}
