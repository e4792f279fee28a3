use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

/// Outcome of parameter estimation. The sampled positions are announced and
/// removed from the key material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeOutcome {
    pub ok: bool,
    pub eta_hat: f64,
    /// Sampled positions, increasing.
    pub sample: Vec<usize>,
    pub x_rest: Bits,
    pub y_rest: Bits,
}

/// Samples s positions without replacement, estimates η̂ on them and accepts
/// iff η̂ ≤ η0.
pub fn parameter_estimation<R: Rng + ?Sized>(x: &[u8], y: &[u8], s: usize, eta0: f64, rng: &mut R) -> Result<PeOutcome> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    let n = x.len();
    if s > n {
        return Err(Error::InvalidParameter { field: "s", reason: format!("sample size {s} exceeds {n} sifted bits") });
    }
    let mut sample = rand::seq::index::sample(rng, n, s).into_vec();
    sample.sort_unstable();
    let errors = sample.iter().filter(|&&i| x[i] != y[i]).count();
    let eta_hat = if s == 0 { 0.0 } else { errors as f64 / s as f64 };
    let mut in_sample = vec![false; n];
    for &i in &sample {
        in_sample[i] = true;
    }
    let keep = |v: &[u8]| v.iter().zip(&in_sample).filter(|(_, &t)| !t).map(|(&b, _)| b).collect();
    Ok(PeOutcome { ok: eta_hat <= eta0, eta_hat, x_rest: keep(x), y_rest: keep(y), sample })
}
