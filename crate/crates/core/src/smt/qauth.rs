use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::clifford::as_pauli;
use crate::quantum::{clifford_group, partial_trace, pauli_apply, tensor, ComplexMatrix, DensityOperator, PauliIndex};

fn key_pauli(key: &[u8], qubits: usize) -> Result<PauliIndex> {
    if key.len() != 2 * qubits {
        return Err(Error::LengthMismatch { expected: 2 * qubits, got: key.len() });
    }
    PauliIndex::from_key_bits(&key.iter().map(|&b| b == 1).collect::<Vec<_>>())
}

/// Applies Z^z X^x with x the first n key bits and z the next n.
pub fn qotp_encrypt(rho: &DensityOperator, key: &[u8]) -> Result<DensityOperator> {
    pauli_apply(rho, &key_pauli(key, rho.qubits())?)
}

pub fn qotp_decrypt(cipher: &DensityOperator, key: &[u8]) -> Result<DensityOperator> {
    qotp_encrypt(cipher, key)
}

/// Keyed encodings U_k on m message and t trap qubits.
#[derive(Clone, Debug)]
pub struct PurityTestingFamily {
    m: usize,
    t: usize,
    codes: Vec<ComplexMatrix>,
}

impl PurityTestingFamily {
    pub fn new(m: usize, t: usize, codes: Vec<ComplexMatrix>) -> Result<Self> {
        if m == 0 || t == 0 {
            return Err(Error::InvalidParameter { field: "m, t", reason: "need at least one message and one trap qubit".into() });
        }
        if codes.is_empty() {
            return Err(Error::InvalidParameter { field: "codes", reason: "empty family".into() });
        }
        let d = 1usize << (m + t);
        if let Some(bad) = codes.iter().find(|u| u.rows() != d || u.cols() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.rows() });
        }
        Ok(Self { m, t, codes })
    }

    /// Every Clifford unitary on m + t ≤ 2 qubits.
    pub fn clifford(m: usize, t: usize) -> Result<Self> {
        Self::new(m, t, clifford_group(m + t)?.to_vec())
    }

    /// The single code U = I.
    pub fn identity(m: usize, t: usize) -> Result<Self> {
        Self::new(m, t, vec![ComplexMatrix::identity(1 << (m + t))])
    }

    pub fn message_qubits(&self) -> usize {
        self.m
    }

    pub fn trap_qubits(&self) -> usize {
        self.t
    }

    pub fn codes(&self) -> &[ComplexMatrix] {
        &self.codes
    }

    /// Uniform key: Pauli bits, trap value and code index.
    pub fn random_key<R: Rng + ?Sized>(&self, rng: &mut R) -> QAuthKey {
        QAuthKey {
            pauli: (0..2 * self.m).map(|_| rng.random_range(0..2u8)).collect(),
            trap: rng.random_range(0..1u64 << self.t),
            code: rng.random_range(0..self.codes.len()),
        }
    }

    fn code(&self, key: &QAuthKey) -> Result<&ComplexMatrix> {
        self.codes.get(key.code).ok_or(Error::InvalidParameter { field: "code", reason: format!("index {} out of range", key.code) })
    }

    fn check_trap(&self, key: &QAuthKey) -> Result<()> {
        if key.trap >> self.t != 0 {
            return Err(Error::InvalidParameter { field: "trap", reason: format!("{} needs more than {} bits", key.trap, self.t) });
        }
        Ok(())
    }

    // I_M ⊗ |s⟩⟨s|.
    fn trap_projector(&self, s: u64) -> ComplexMatrix {
        let dt = 1usize << self.t;
        let mut diag = vec![0.0; dt];
        diag[s as usize] = 1.0;
        ComplexMatrix::identity(1 << self.m).kron(&ComplexMatrix::diagonal(&diag))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAuthKey {
    /// 2m bits for the quantum one-time pad.
    pub pauli: Vec<u8>,
    /// Trap value s.
    pub trap: u64,
    /// Index of U_k in the family.
    pub code: usize,
}

/// Pads the message, appends |s⟩ and applies U_k.
pub fn q_authenticate(rho: &DensityOperator, key: &QAuthKey, family: &PurityTestingFamily) -> Result<DensityOperator> {
    if rho.qubits() != family.m {
        return Err(Error::DimensionMismatch { expected: family.m, got: rho.qubits() });
    }
    family.check_trap(key)?;
    let padded = qotp_encrypt(rho, &key.pauli)?;
    let full = tensor(&padded, &DensityOperator::basis(family.t, key.trap as usize));
    full.apply_unitary(family.code(key)?)
}

/// Acceptance probability and the message state after acceptance.
pub fn q_verify_exact(
    cipher: &DensityOperator,
    key: &QAuthKey,
    family: &PurityTestingFamily,
) -> Result<(f64, Option<DensityOperator>)> {
    let n = family.m + family.t;
    if cipher.qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cipher.qubits() });
    }
    family.check_trap(key)?;
    let decoded = cipher.apply_unitary(&family.code(key)?.adjoint())?;
    let proj = family.trap_projector(key.trap);
    let kept = decoded.matrix().conjugate_by(&proj);
    let p = kept.trace().re;
    if p < 1e-12 {
        return Ok((0.0, None));
    }
    let post = DensityOperator::new(kept.scale(1.0 / p).hermitian_part())?;
    let keep: Vec<bool> = (0..n).map(|q| q < family.m).collect();
    let message = partial_trace(&post, &keep)?;
    Ok((p.min(1.0), Some(qotp_decrypt(&message, &key.pauli)?)))
}

/// Samples the trap measurement: the message on acceptance, None (⊥) otherwise.
pub fn q_verify<R: Rng + ?Sized>(
    cipher: &DensityOperator,
    key: &QAuthKey,
    family: &PurityTestingFamily,
    rng: &mut R,
) -> Result<Option<DensityOperator>> {
    let (p, state) = q_verify_exact(cipher, key, family)?;
    Ok(if rng.random::<f64>() < p { state } else { None })
}

/// Per-error outcome counts of the purity test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtcError {
    pub error: PauliIndex,
    /// Pr_k[not caught].
    pub undetected: f64,
    /// Pr_k[not caught ∧ not trivial].
    pub harmful: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtcReport {
    pub epsilon: f64,
    pub worst: PauliIndex,
    pub errors: Vec<PtcError>,
}

/// Exact ε of the family: the largest probability over the code key that a
/// non-identity Pauli error is neither caught by the trap nor trivial on the
/// message.
pub fn purity_testing_epsilon(family: &PurityTestingFamily) -> Result<PtcReport> {
    let (m, t) = (family.m, family.t);
    let n = m + t;
    let adjoints: Vec<ComplexMatrix> = family.codes.iter().map(|u| u.adjoint()).collect();
    let mut errors = Vec::new();
    for e in PauliIndex::all(n).filter(|p| !p.is_identity()) {
        let em = e.matrix();
        let (mut undetected, mut harmful) = (0usize, 0usize);
        for ud in &adjoints {
            let (eff, _) = as_pauli(&em.conjugate_by(ud), n)
                .ok_or_else(|| Error::InvalidParameter { field: "codes", reason: "encoding is not Clifford".into() })?;
            if eff.x[m..].iter().any(|&b| b) {
                continue;
            }
            undetected += 1;
            if eff.x[..m].iter().chain(&eff.z[..m]).any(|&b| b) {
                harmful += 1;
            }
        }
        let total = adjoints.len() as f64;
        errors.push(PtcError { error: e, undetected: undetected as f64 / total, harmful: harmful as f64 / total });
    }
    let worst = errors
        .iter()
        .max_by(|a, b| a.harmful.total_cmp(&b.harmful))
        .ok_or_else(|| Error::InvalidParameter { field: "m, t", reason: "no errors to test".into() })?;
    Ok(PtcReport { epsilon: worst.harmful, worst: worst.error.clone(), errors })
}
