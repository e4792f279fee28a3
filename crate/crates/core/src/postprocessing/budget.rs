use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::h;

/// Error and length accounting for one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyBudget {
    pub eps_pe: f64,
    pub eps_ec: f64,
    pub eps_pa: f64,
    pub eps_corr: f64,
    pub eps_secr: f64,
    /// Syndrome bits actually sent.
    pub leak: usize,
    /// Verification tag length v.
    pub tag_bits: usize,
    /// Final key length ℓ.
    pub length: usize,
}

impl KeyBudget {
    /// ε_secr = ε_PE + ε_PA and ε_corr = ε_EC + 2^(−v)·⌈n/v⌉ for an n-bit
    /// reconciled string (the tag term vanishes when v = 0).
    pub fn new(eps_pe: f64, eps_ec: f64, eps_pa: f64, tag_bits: usize, n: usize) -> Result<Self> {
        for (field, v) in [("eps_pe", eps_pe), ("eps_ec", eps_ec), ("eps_pa", eps_pa)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter { field, reason: format!("{v} not in (0, 1]") });
            }
        }
        Ok(Self {
            eps_pe,
            eps_ec,
            eps_pa,
            eps_corr: eps_ec + tag_collision_bound(n, tag_bits),
            eps_secr: eps_pe + eps_pa,
            leak: 0,
            tag_bits,
            length: 0,
        })
    }

    /// ε_corr + ε_secr.
    pub fn global(&self) -> f64 {
        self.eps_corr + self.eps_secr
    }
}

/// ⌈n/v⌉ / 2^v, the collision probability of the verification hash.
pub fn tag_collision_bound(n: usize, v: usize) -> f64 {
    if v == 0 {
        return 0.0;
    }
    n.div_ceil(v) as f64 / 2f64.powi(v as i32)
}

/// Sampling correction μ = √((s+n)(s+1)/(s²n) · ln(1/ε_PE)).
pub fn sampling_correction(n: usize, s: usize, eps_pe: f64) -> f64 {
    if n == 0 || s == 0 || eps_pe >= 1.0 {
        return 0.0;
    }
    let (n, s) = (n as f64, s as f64);
    ((s + n) * (s + 1.0) / (s * s * n) * (1.0 / eps_pe).ln()).sqrt()
}

/// Leading term n(1 − h(η0)) of the min-entropy bound.
pub fn hmin_bound(n: usize, eta0: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eta0) {
        return Err(Error::InvalidParameter { field: "eta0", reason: format!("{eta0} not in [0, 1/2]") });
    }
    Ok(n as f64 * (1.0 - h(eta0)))
}

/// 1 − 2h(η); negative past the zero crossing.
pub fn asymptotic_rate(eta: f64) -> f64 {
    1.0 - 2.0 * h(eta.clamp(0.0, 0.5))
}

/// n(1 − h(η̂+μ)) − leak − v − 2·log₂(1/ε_PA) before flooring and clamping.
/// η̂+μ is capped at ½, where the bound is already zero.
pub fn key_length_raw(n: usize, eta_hat: f64, s: usize, leak: usize, budget: &KeyBudget) -> f64 {
    let mu = sampling_correction(n, s, budget.eps_pe);
    let eta = (eta_hat + mu).min(0.5);
    n as f64 * (1.0 - h(eta)) - leak as f64 - budget.tag_bits as f64 - 2.0 * (1.0 / budget.eps_pa).log2()
}

/// ℓ = max(0, ⌊n(1 − h(η̂+μ)) − leak − v − 2·log₂(1/ε_PA)⌋).
pub fn key_length(n: usize, eta_hat: f64, s: usize, leak: usize, budget: &KeyBudget) -> usize {
    let raw = key_length_raw(n, eta_hat, s, leak, budget);
    (raw + 1e-9).floor().max(0.0) as usize
}
