//! The one serializable source of truth for a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::LogisticSystemParams;
use crate::error::{Error, Result};
use crate::experiment::{ClusterThresholds, DatasetConfig, RestartSettings};
use crate::mapper_coach::{Architecture, TrainingConfig};
use crate::neuralnet::AdamConfig;

/// Flat experiment configuration. Every field has a default; the defaults
/// are the reference setup (r = 3.99, beta = 0.2, N = 20000, batch 2000,
/// 4000 epochs, width 20, 20 restarts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub r: f64,
    pub beta_xz: f64,
    pub beta_yz: f64,
    pub n_points: usize,
    pub burn_in: usize,
    pub n_train: Option<usize>,
    pub width: usize,
    pub depth: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub n_restarts: usize,
    pub master_seed: u64,
    pub converged_threshold: f64,
    pub local_minimum_threshold: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let system = LogisticSystemParams::default();
        let data = DatasetConfig::default();
        let training = TrainingConfig::default();
        let thresholds = ClusterThresholds::default();
        Self {
            r: system.r,
            beta_xz: system.beta_xz,
            beta_yz: system.beta_yz,
            n_points: data.n_points,
            burn_in: data.burn_in,
            n_train: data.n_train,
            width: training.architecture.width,
            depth: training.architecture.depth,
            batch_size: training.batch_size,
            epochs: training.epochs,
            lr: training.adam.lr,
            beta1: training.adam.beta1,
            beta2: training.adam.beta2,
            epsilon: training.adam.epsilon,
            n_restarts: 20,
            master_seed: 0,
            converged_threshold: thresholds.converged,
            local_minimum_threshold: thresholds.local_minimum,
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn system(&self) -> LogisticSystemParams {
        LogisticSystemParams {
            r: self.r,
            beta_xz: self.beta_xz,
            beta_yz: self.beta_yz,
        }
    }

    pub fn dataset(&self) -> DatasetConfig {
        DatasetConfig {
            n_points: self.n_points,
            burn_in: self.burn_in,
            n_train: self.n_train,
        }
    }

    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
            seed: self.master_seed,
            architecture: Architecture {
                width: self.width,
                depth: self.depth,
            },
        }
    }

    pub fn thresholds(&self) -> ClusterThresholds {
        ClusterThresholds {
            converged: self.converged_threshold,
            local_minimum: self.local_minimum_threshold,
        }
    }

    pub fn restart_settings(&self, jobs: usize) -> RestartSettings {
        RestartSettings {
            training: self.training(),
            n_restarts: self.n_restarts,
            master_seed: self.master_seed,
            thresholds: self.thresholds(),
            jobs,
        }
    }

    /// Copy with `n_train` filled in, as echoed next to run outputs.
    pub fn resolved(&self) -> Self {
        Self {
            n_train: Some(self.dataset().effective_n_train()),
            ..self.clone()
        }
    }

    /// Checks the settings that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.system().validate()?;
        if self.n_points < 2 {
            return Err(Error::Config(format!(
                "n_points must be >= 2, got {}",
                self.n_points
            )));
        }
        if self.n_restarts == 0 {
            return Err(Error::Config("n_restarts must be at least 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be at least 1".into(),
            ));
        }
        self.training().adam.validate()?;
        self.training().architecture.validate()?;
        self.thresholds().validate()
    }
}
