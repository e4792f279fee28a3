//! One axis of the scenario swept over a grid, with 95% normal radii.

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::runner::run_trials;
use crate::seed::stream_seed;

const Z95: f64 = 1.96;

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub trials: usize,
    /// Signed asymptotic rate, or ℓ/n for finite keys.
    pub mean_rate: f64,
    pub rate_radius: f64,
    pub abort_rate: f64,
    pub abort_radius: f64,
    pub mean_qber: Option<f64>,
}

fn mean_and_radius(xs: &[f64]) -> (f64, f64) {
    let t = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / t;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (mean, Z95 * (var / t).sqrt())
}

/// Point i runs its trials under master seed `stream_seed(seed, i)`.
pub fn run_sweep(config: &ScenarioConfig, pool: &rayon::ThreadPool) -> CliResult<Vec<SweepRow>> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation { field: "sweep".into(), reason: "missing [sweep] section".into() })?;
    let grid = sweep.grid()?;
    let mut out = Vec::with_capacity(grid.len());
    for (i, &value) in grid.iter().enumerate() {
        let mut point = config.with_axis(sweep.axis, value)?;
        point.seed = stream_seed(config.seed, i as u64);
        let rows = run_trials(&point, pool)?;
        let rates: Vec<f64> = rows.iter().map(|r| r.rate_per_bit(point.protocol.n)).collect();
        let aborts: Vec<f64> = rows.iter().map(|r| r.abort as u8 as f64).collect();
        let qbers: Vec<f64> = rows.iter().filter_map(|r| r.eta_hat).collect();
        let (mean_rate, rate_radius) = mean_and_radius(&rates);
        let abort_rate = aborts.iter().sum::<f64>() / aborts.len() as f64;
        out.push(SweepRow {
            axis: sweep.axis.name(),
            value,
            trials: rows.len(),
            mean_rate,
            rate_radius,
            abort_rate,
            abort_radius: Z95 * (abort_rate * (1.0 - abort_rate) / aborts.len() as f64).sqrt(),
            mean_qber: (!qbers.is_empty()).then(|| qbers.iter().sum::<f64>() / qbers.len() as f64),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_of_constant_samples_is_zero() {
        assert_eq!(mean_and_radius(&[0.5; 10]), (0.5, 0.0));
        let (m, r) = mean_and_radius(&[0.0, 1.0]);
        assert_eq!(m, 0.5);
        assert!((r - Z95 * 0.5).abs() < 1e-15);
    }
}
