use super::matrix::{ComplexMatrix, ONE, ZERO};
use super::state::{DensityOperator, TOL};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
}

impl QuantumChannel {
    /// Checks Σ K†K = I within [`TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidState("no Kraus operators".into()))?;
        let (dout, din) = (first.rows(), first.cols());
        let mut sum = ComplexMatrix::zeros(din, din);
        for k in &kraus {
            if k.rows() != dout || k.cols() != din {
                return Err(Error::DimensionMismatch { expected: din, got: k.cols() });
            }
            sum = &sum + &(&k.adjoint() * k);
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(din));
        if dev > TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self { kraus })
    }

    pub fn identity(qubits: usize) -> Self {
        Self { kraus: vec![ComplexMatrix::identity(1 << qubits)] }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Single-qubit depolarizing channel with Kraus operators
    /// {√(1−3q/4) I, √(q/4) X, √(q/4) Y, √(q/4) Z}: the qubit is replaced by τ
    /// with probability q.
    pub fn depolarizing(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::ProbabilityOutOfRange(q));
        }
        let a = (1.0 - 0.75 * q).sqrt();
        let b = (q / 4.0).sqrt();
        let i = Complex64::new(0.0, 1.0);
        let c = |z: Complex64| z * b;
        Ok(Self {
            kraus: vec![
                ComplexMatrix::identity(2).scale(a),
                ComplexMatrix::from_rows(2, 2, &[ZERO, c(ONE), c(ONE), ZERO]),
                ComplexMatrix::from_rows(2, 2, &[ZERO, c(-i), c(i), ZERO]),
                ComplexMatrix::from_rows(2, 2, &[c(ONE), ZERO, ZERO, c(-ONE)]),
            ],
        })
    }

    /// Embeds a single-qubit channel on qubit `target` of an `n`-qubit register.
    pub fn on_qubit(&self, target: usize, n: usize) -> Result<Self> {
        if self.input_dim() != 2 || target >= n {
            return Err(Error::DimensionMismatch { expected: 2, got: self.input_dim() });
        }
        let left = ComplexMatrix::identity(1 << target);
        let right = ComplexMatrix::identity(1 << (n - target - 1));
        Ok(Self { kraus: self.kraus.iter().map(|k| left.kron(k).kron(&right)).collect() })
    }

    /// Sequential composition: `self` first, then `next`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        if next.input_dim() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), got: next.input_dim() });
        }
        let kraus = next
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Ok(Self { kraus })
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].rows()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: rho.dim() });
        }
        let d = self.output_dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            out = &out + &rho.matrix().conjugate_by(k);
        }
        Ok(DensityOperator::from_matrix_unchecked(out.hermitian_part()))
    }
}

/// Depolarizes every qubit of `rho` independently with probability `q`.
pub fn depolarize(rho: &DensityOperator, q: f64) -> Result<DensityOperator> {
    let single = QuantumChannel::depolarizing(q)?;
    let n = rho.qubits();
    let mut out = rho.clone();
    for target in 0..n {
        out = single.on_qubit(target, n)?.apply(&out)?;
    }
    Ok(out)
}
