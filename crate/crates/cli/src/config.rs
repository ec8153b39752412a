use anyhow::{bail, ensure, Context, Result};
use phipp::{OptimizerConfig, PhiSpec, PursuitConfig, PursuitMode, QMode, TestSettings, TruncationRule};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Every setting a command needs. Serialized verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(with = "divergence_name")]
    pub divergence: PhiSpec,
    pub alpha: f64,
    pub q_alpha_mode: QMode,
    /// Truncation exponent; `None` uses the midpoint of the admissible range.
    pub nu: Option<f64>,
    pub truncation_scale: f64,
    pub annealing: OptimizerConfig,
    pub seed: u64,
    pub mode: PursuitMode,
    pub grid_resolution: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            divergence: PhiSpec::ChiSquare,
            alpha: 0.9,
            q_alpha_mode: QMode::Paper,
            nu: None,
            truncation_scale: TruncationRule::default().scale,
            annealing: OptimizerConfig::default(),
            seed: 0,
            mode: PursuitMode::Elliptical,
            grid_resolution: 50,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.divergence.validate()?;
        if !self.divergence.is_smooth() {
            bail!("divergence {} has no derivative and cannot drive the dual criterion", self.divergence);
        }
        self.test_settings().validate()?;
        self.pursuit_config().truncation.validate(dim)?;
        self.annealing.validate()?;
        ensure!(self.grid_resolution >= 2, "grid resolution must be at least 2, got {}", self.grid_resolution);
        Ok(())
    }

    pub fn test_settings(&self) -> TestSettings {
        TestSettings { alpha: self.alpha, q_mode: self.q_alpha_mode }
    }

    pub fn pursuit_config(&self) -> PursuitConfig {
        PursuitConfig {
            truncation: TruncationRule { nu: self.nu, scale: self.truncation_scale },
            optimizer: self.annealing,
            ..PursuitConfig::default()
        }
    }
}

mod divergence_name {
    use phipp::PhiSpec;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(spec: &PhiSpec, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(spec)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PhiSpec, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}
