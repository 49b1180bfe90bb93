//! Gradient-based experiments: linear coupling regression, nonlinear coupling
//! regression, and maximum-likelihood training with padded data.

mod adam;
pub mod datasets;
mod linear;
mod mle;
mod mlp;
mod nvp;
mod regression;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use adam::Adam;
pub use datasets::{dataset_sample, SyntheticDataset};
pub use linear::{
    fit_linear_product, init_pln, mle_linear_gaussian_check, pln_gradients, sample_target, train_pln, FactorKind, LinearStack,
    MleCheck, PlnModel,
};
pub use mle::{train_nvp_mle, Padding};
pub use mlp::Mlp;
pub use nvp::{NvpLayer, NvpModel};
pub use regression::{train_coupling_regression, Architecture, RegressionTarget};

use crate::coupling::CouplingError;
use crate::matcore::MatError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged at step {step}")]
    DivergedRun { step: usize, record: Box<RunRecord> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    GaussianMatrix,
    ToeplitzMatrix,
    ElementwiseTanh,
    ElementwiseRelu,
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seeds: usize,
    pub init_std: f64,
    pub target: TargetKind,
    pub log_every: usize,
    pub hidden: usize,
    pub master_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            steps: 20_000,
            batch_size: 256,
            seeds: 5,
            init_std: 1e-5,
            target: TargetKind::GaussianMatrix,
            log_every: 100,
            hidden: 128,
            master_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("lr must be positive");
        }
        if self.steps == 0 || self.batch_size == 0 || self.seeds == 0 || self.log_every == 0 || self.hidden == 0 {
            return bad("steps, batch_size, seeds, log_every and hidden must be positive");
        }
        if !(self.init_std >= 0.0) || !self.init_std.is_finite() {
            return bad("init_std must be nonnegative");
        }
        Ok(())
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nll: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cond_median: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cond_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    /// Free-form run labels, e.g. `d`, `n_layers`, `padding`.
    pub labels: Vec<(String, String)>,
    pub seed: u64,
    pub config_hash: String,
    pub entries: Vec<LogEntry>,
    pub final_entry: Option<LogEntry>,
    pub notes: Vec<String>,
}

impl RunRecord {
    pub fn new(experiment: &str, seed: u64, config: &TrainConfig) -> Self {
        Self {
            experiment: experiment.into(),
            labels: vec![],
            seed,
            config_hash: config.hash(),
            entries: vec![],
            final_entry: None,
            notes: vec![],
        }
    }

    pub fn label(mut self, key: &str, value: impl ToString) -> Self {
        self.labels.push((key.into(), value.to_string()));
        self
    }

    pub fn get_label(&self, key: &str) -> Option<&str> {
        self.labels.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn diverged(mut self, step: usize) -> TrainError {
        self.notes.push(format!("non-finite loss at step {step}"));
        TrainError::DivergedRun { step, record: Box::new(self) }
    }

    /// One JSON object per log entry.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }
}

/// Steps at which a run logs: every `log_every` steps and the last step.
fn should_log(step: usize, cfg: &TrainConfig) -> bool {
    step % cfg.log_every == 0 || step == cfg.steps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_round_trip_and_hash() {
        let c = TrainConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        let back: TrainConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let other = TrainConfig { lr: 1e-3, ..c.clone() };
        assert_ne!(other.hash(), c.hash());
        let partial: TrainConfig = serde_json::from_str(r#"{"steps": 5}"#).unwrap();
        assert_eq!(partial.steps, 5);
        assert_eq!(partial.lr, 1e-4);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"stepz": 5}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { steps: 0, ..Default::default() }.validate().is_err());
    }
}
