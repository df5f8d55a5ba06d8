//! TOML run configuration. Every section and field is optional; missing
//! values take the built-in defaults and unknown keys are rejected.
//!
//! ```toml
//! [generator]
//! seed = 1
//! symmetry_prob = 0.7
//!
//! [physics]
//! drivetrain_efficiency = 0.75
//!
//! [model]
//! d_model = 64
//! n_layers = 2
//!
//! [train]
//! epochs = 200
//!
//! [pipeline]
//! split_seed = 0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use skyforge_core::{GeneratorConfig, ModelConfig, PhysicsConstants, TrainConfig};

use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSettings {
    pub split_seed: u64,
    pub min_recall: f64,
    pub minutes_per_eval: f64,
    /// First generator index used when filtering, so filtered designs are
    /// disjoint from a training set built at indices `0..n`.
    pub filter_start_index: u64,
    pub verify_seed: u64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            split_seed: 0,
            min_recall: 0.85,
            minutes_per_eval: 4.0,
            filter_start_index: 1_000_000,
            verify_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectConfig {
    pub generator: GeneratorConfig,
    pub physics: PhysicsConstants,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub pipeline: PipelineSettings,
}

impl ProjectConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ProjectConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fsutil::read_to_string(path)?, path)
    }

    /// `--config` if given, otherwise defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> std::result::Result<(), skyforge_core::ConfigError> {
        self.generator.validate()?;
        self.physics.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        let p = &self.pipeline;
        if !(p.min_recall > 0.0 && p.min_recall <= 1.0) {
            return Err(skyforge_core::ConfigError::BadProbability {
                field: "pipeline.min_recall",
                value: p.min_recall,
            });
        }
        if p.minutes_per_eval.is_nan() || p.minutes_per_eval <= 0.0 {
            return Err(skyforge_core::ConfigError::Invalid("pipeline.minutes_per_eval must be > 0".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; equal configs hash equal.
    pub fn hash(&self) -> String {
        fsutil::sha256_hex(serde_json::to_string(self).expect("serializable").as_bytes())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serializable")
    }
}
