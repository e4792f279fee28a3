//! Scenario files: TOML with a few top-level keys and one section per stage.

use std::path::Path;

use qkd_core::qkd::audit::TinyParams;
use qkd_core::qkd::{Attack, ProtocolParams, Scenario};
use qkd_core::smt::{SmtConfig, Tamper};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Key distribution only.
    #[default]
    Qkd,
    /// QKD followed by key splitting and one authenticated, encrypted message.
    Smt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Depolarizing probability q.
    pub q: f64,
    pub attack: Attack,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { q: 0.0, attack: Attack::None }
    }
}

impl ChannelConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario { q: self.q, attack: self.attack.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmtSection {
    pub initial_key: usize,
    /// Authentication field size m.
    pub tag_bits: u32,
    pub message_bits: usize,
    pub tamper: Tamper,
}

impl Default for SmtSection {
    fn default() -> Self {
        let d = SmtConfig::default();
        Self { initial_key: d.initial_key, tag_bits: d.tag_bits, message_bits: d.message_bits, tamper: Tamper::None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Q,
    Eta0,
    N,
    F,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Q => "q",
            Axis::Eta0 => "eta0",
            Axis::N => "n",
            Axis::F => "f",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    /// Explicit grid; otherwise `steps` evenly spaced points from `start` to `stop`.
    #[serde(default)]
    pub values: Vec<f64>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub steps: Option<usize>,
}

impl SweepSection {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let grid = if !self.values.is_empty() {
            self.values.clone()
        } else {
            match (self.start, self.stop, self.steps) {
                (Some(a), Some(b), Some(1)) if a == b => vec![a],
                (Some(a), Some(b), Some(k)) if k >= 2 => {
                    (0..k).map(|i| round12(a + (b - a) * i as f64 / (k - 1) as f64)).collect()
                }
                _ => vec![],
            }
        };
        if grid.is_empty() {
            return Err(invalid("sweep", "empty grid: give `values` or `start`, `stop` and `steps`"));
        }
        Ok(grid)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    /// Audit this instance, over the top-level channel, instead of the bundled set.
    pub params: Option<TinyParams>,
    /// Audit the ideal key with the protocol's abort and transcript statistics.
    pub ideal: bool,
    pub expect_violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: Mode,
    /// Master seed; every trial derives its own stream from it.
    pub seed: u64,
    pub trials: usize,
    /// Record wall-clock times. Off by default so reruns are byte-identical.
    pub timing: bool,
    /// Include the public messages of every run in the transcript file.
    pub record_messages: bool,
    pub protocol: ProtocolParams,
    pub channel: ChannelConfig,
    pub smt: SmtSection,
    pub sweep: Option<SweepSection>,
    pub audit: AuditSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            mode: Mode::Qkd,
            seed: 0,
            trials: 100,
            timing: false,
            record_messages: false,
            protocol: ProtocolParams::default(),
            channel: ChannelConfig::default(),
            smt: SmtSection::default(),
            sweep: None,
            audit: AuditSection::default(),
        }
    }
}

// Drops the last bits of float noise so grid points print as written.
fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Validation { field: field.into(), reason: reason.into() }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::Parse { path: path.into(), message },
            e => e,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Parse { path: "<config>".into(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be positive"));
        }
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return Err(invalid("name", format!("{:?} must be non-empty without commas, quotes or newlines", self.name)));
        }
        self.protocol.validate()?;
        self.channel.scenario().validate()?;
        if self.mode == Mode::Smt {
            if self.protocol.asymptotic {
                return Err(invalid("protocol.asymptotic", "smt mode needs a finite key"));
            }
            if ![4, 8, 32].contains(&self.smt.tag_bits) {
                return Err(invalid("smt.tag_bits", format!("{} not in {{4, 8, 32}}", self.smt.tag_bits)));
            }
            if self.smt.initial_key < 4 * self.smt.tag_bits as usize {
                return Err(invalid(
                    "smt.initial_key",
                    format!("{} bits cannot hold two {}-bit authentication keys", self.smt.initial_key, 2 * self.smt.tag_bits),
                ));
            }
        }
        if let Some(p) = &self.audit.params {
            p.validate()?;
        }
        if let Some(sweep) = &self.sweep {
            sweep.grid()?;
        }
        Ok(())
    }

    pub fn smt_config(&self) -> SmtConfig {
        SmtConfig {
            qkd: self.protocol.clone(),
            scenario: self.channel.scenario(),
            initial_key: self.smt.initial_key,
            tag_bits: self.smt.tag_bits,
            message_bits: self.smt.message_bits,
        }
    }

    /// The configuration with one sweep coordinate applied. Sweeping n keeps
    /// the sample fraction s/n.
    pub fn with_axis(&self, axis: Axis, value: f64) -> CliResult<Self> {
        let mut c = self.clone();
        match axis {
            Axis::Q => c.channel.q = value,
            Axis::Eta0 => c.protocol.eta0 = value,
            Axis::F => c.channel.attack = Attack::InterceptResend { f: value },
            Axis::N => {
                if value < 2.0 || value.fract() != 0.0 {
                    return Err(invalid("sweep.values", format!("n = {value} is not an integer above 1")));
                }
                let n = value as usize;
                let frac = self.protocol.s as f64 / self.protocol.n as f64;
                c.protocol.n = n;
                c.protocol.s = ((n as f64 * frac).round() as usize).clamp(1, n - 1);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_an_empty_file() {
        let c = ScenarioConfig::parse("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
    }

    #[test]
    fn sections_and_attack() {
        let c = ScenarioConfig::parse(
            "name = \"ir\"\ntrials = 3\n[protocol]\nn = 500\ns = 50\n[protocol.ir]\nblock = 12\n[channel]\nattack = { kind = \"intercept_resend\", f = 0.5 }\n",
        )
        .unwrap();
        assert_eq!(c.protocol.n, 500);
        assert_eq!(c.protocol.ir.block, 12);
        assert_eq!(c.channel.attack, Attack::InterceptResend { f: 0.5 });
    }

    #[test]
    fn errors_name_the_field() {
        let e = ScenarioConfig::parse("[protocol]\neta0 = 0.7\n").unwrap_err();
        assert!(matches!(&e, CliError::Validation { field, .. } if field == "eta0"), "{e}");
        let e = ScenarioConfig::parse("[protocol]\nn = \"many\"\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = ScenarioConfig::parse("trails = 3\n").unwrap_err();
        assert!(e.to_string().contains("trails"), "{e}");
    }

    #[test]
    fn sweep_grid() {
        let s = SweepSection { axis: Axis::Q, values: vec![], start: Some(0.0), stop: Some(0.2), steps: Some(5) };
        let g = s.grid().unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[1], 0.05);
        assert!((g[4] - 0.2).abs() < 1e-15);
        let empty = SweepSection { steps: None, ..s };
        assert!(empty.grid().is_err());
    }

    #[test]
    fn n_axis_keeps_sample_fraction() {
        let c = ScenarioConfig::default().with_axis(Axis::N, 4096.0).unwrap();
        assert_eq!(c.protocol.s, 512);
        assert!(ScenarioConfig::default().with_axis(Axis::N, 10.5).is_err());
    }
}
