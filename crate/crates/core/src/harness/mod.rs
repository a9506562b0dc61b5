//! Experiment orchestration: configuration, the training loop, metrics, and
//! multi-optimizer comparisons.
//!
//! A run is a pure function of its [`ExperimentConfig`]: initial parameters,
//! data splits, batch orders, dropout masks and optimizer noise each come
//! from their own stream derived from the master seed, so every emitted
//! metrics byte replays exactly.

mod compare;
mod gradcheck;
mod metrics;
mod quadratic;
mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use compare::{compare, compare_with_data, BestAccuracyTable, Comparison};
pub use gradcheck::{gradcheck_suite, GradcheckReport, GRADCHECK_STEP, GRADCHECK_TOLERANCE};
pub use metrics::{
    er_snapshot, parse_metrics_csv, read_metrics_json, step_histogram, write_metrics, ErSnapshot,
    MetricsFormat, MetricsRecord, ER_BINS, ER_BIN_WIDTH, ER_THRESHOLDS, STEP_BIN_EDGES,
};
pub use quadratic::{quadratic_trajectory, write_trajectory, write_trajectory_csv, TrajectoryPoint};
pub use run::{prepare_data, run_experiment, run_with_data, BatchLoss, PreparedData, RunOutput, Snapshot};

use crate::error::{Error, Result};
use crate::models::{GradOracle, LogRegModel, MlpModel, QuadraticModel};
use crate::optim::{HyperParams, OptimizerRegistry, WindowMode};

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "ADASMOOTH_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Quadratic,
    Logreg,
    Mlp { hidden: usize, dropout: f64 },
}

impl ModelConfig {
    pub fn mlp() -> Self {
        ModelConfig::Mlp {
            hidden: MlpModel::DEFAULT_HIDDEN,
            dropout: MlpModel::DEFAULT_DROPOUT,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "quadratic" => Ok(ModelConfig::Quadratic),
            "logreg" | "logistic" => Ok(ModelConfig::Logreg),
            "mlp" => Ok(Self::mlp()),
            other => Err(Error::invalid(format!("unknown model {other:?}"))),
        }
    }

    /// Instantiates the model for data with `features` inputs and `classes` labels.
    pub fn build(&self, features: usize, classes: usize) -> Result<Box<dyn GradOracle>> {
        Ok(match *self {
            ModelConfig::Quadratic => Box::new(QuadraticModel),
            ModelConfig::Logreg => Box::new(LogRegModel::new(features, classes)?),
            ModelConfig::Mlp { hidden, dropout } => {
                Box::new(MlpModel::new(features, hidden, classes, dropout)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Mnist,
    Census,
    Blobs,
    /// No data; only valid for the quadratic model.
    None,
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(DatasetKind::Mnist),
            "census" | "adult" => Ok(DatasetKind::Census),
            "blobs" => Ok(DatasetKind::Blobs),
            "none" => Ok(DatasetKind::None),
            other => Err(Error::invalid(format!("unknown dataset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Directory holding the data files. Falls back to `$ADASMOOTH_DATA_DIR`, then `data`.
    pub data_dir: Option<PathBuf>,
    /// Seeded subsample of the training rows.
    pub subset: Option<usize>,
    /// Training share for datasets that ship without a fixed split.
    pub train_fraction: f64,
    /// Sample count for synthetic blobs.
    pub blobs_samples: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            kind: DatasetKind::Blobs,
            data_dir: None,
            subset: None,
            train_fraction: 0.7,
            blobs_samples: 2000,
        }
    }
}

impl DatasetConfig {
    pub fn resolved_dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"))
    }
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Display name in comparisons; defaults to the optimizer and its decay constants.
    pub label: Option<String>,
    pub model: ModelConfig,
    pub dataset: DatasetConfig,
    pub optimizer: String,
    pub hyper: HyperParams,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub window: WindowMode,
    /// Epochs whose end-of-epoch ER and step vectors are saved; the last epoch is always added.
    pub snapshot_epochs: Vec<usize>,
    pub per_batch: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_optimizer("adasmooth").expect("builtin optimizer")
    }
}

impl ExperimentConfig {
    /// Default configuration with `name`'s builtin hyper-parameters.
    pub fn for_optimizer(name: &str) -> Result<Self> {
        let hyper = OptimizerRegistry::builtin().defaults(name)?;
        Ok(ExperimentConfig {
            label: None,
            model: ModelConfig::Logreg,
            dataset: DatasetConfig::default(),
            optimizer: name.to_string(),
            hyper,
            epochs: 10,
            batch_size: 64,
            seed: 0,
            window: WindowMode::Epoch,
            snapshot_epochs: vec![1, 5, 20],
            per_batch: false,
            out: None,
        })
    }

    /// Builds a config from a possibly partial JSON document. Missing
    /// hyper-parameters take the defaults of the optimizer the document names.
    pub fn from_json_value(doc: Value) -> Result<Self> {
        let name = doc
            .get("optimizer")
            .and_then(Value::as_str)
            .unwrap_or("adasmooth")
            .to_string();
        let mut base = serde_json::to_value(Self::for_optimizer(&name)?)?;
        merge_json(&mut base, doc);
        Ok(serde_json::from_value(base)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let hp = &self.hyper;
        match self.optimizer.as_str() {
            "adasmooth" | "adasmooth-random" => format!("{}({},{})", self.optimizer, hp.rho1, hp.rho2),
            "adasmooth-delta" => format!("{}({},{})", self.optimizer, hp.rho1, hp.rho2),
            "momentum" | "rmsprop" | "adadelta" => format!("{}({})", self.optimizer, hp.rho),
            _ => format!("{}(eta={})", self.optimizer, hp.eta),
        }
    }

    /// Epochs at which snapshots are taken, sorted, always including the last.
    pub fn snapshot_schedule(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .snapshot_epochs
            .iter()
            .copied()
            .filter(|&e| e >= 1 && e <= self.epochs)
            .chain(std::iter::once(self.epochs))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn validate(&self, registry: &OptimizerRegistry) -> Result<()> {
        registry.get(&self.optimizer)?;
        self.hyper.validate()?;
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        let quadratic = self.model == ModelConfig::Quadratic;
        let no_data = self.dataset.kind == DatasetKind::None;
        if quadratic != no_data {
            return Err(Error::invalid(
                "the quadratic model takes dataset \"none\" and every other model needs data",
            ));
        }
        if let ModelConfig::Mlp { hidden, dropout } = self.model {
            if hidden == 0 || !(0.0..1.0).contains(&dropout) {
                return Err(Error::invalid("mlp needs hidden >= 1 and dropout in [0, 1)"));
            }
        }
        if self.dataset.subset == Some(0) {
            return Err(Error::invalid("subset must be at least 1"));
        }
        Ok(())
    }
}

/// Recursively overlays `patch` onto `base`; objects merge key by key.
fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    // a model or dataset kind switch replaces the whole object
                    Some(slot) if !(slot.is_object() && v.get("kind").is_some()) => merge_json(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::for_optimizer("momentum").unwrap();
        cfg.model = ModelConfig::mlp();
        cfg.dataset.kind = DatasetKind::Mnist;
        cfg.dataset.subset = Some(10_000);
        cfg.out = Some("runs/x".into());
        let text = cfg.to_json_pretty().unwrap();
        assert_eq!(ExperimentConfig::from_json_str(&text).unwrap(), cfg);
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_json_takes_per_kind_defaults() {
        let cfg = ExperimentConfig::from_json_str(r#"{"optimizer": "sgd", "hyper": {"rho": 0.5}}"#).unwrap();
        assert_eq!(cfg.hyper.eta, 0.01);
        assert_eq!(cfg.hyper.rho, 0.5);
        assert_eq!(cfg.hyper.epsilon, 1e-6);
        assert_eq!(cfg.batch_size, 64);
        let cfg = ExperimentConfig::from_json_str(r#"{"model": {"kind": "logreg"}}"#).unwrap();
        assert_eq!(cfg.model, ModelConfig::Logreg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json_str(r#"{"epoch": 3}"#).is_err());
    }

    #[test]
    fn validation() {
        let reg = OptimizerRegistry::builtin();
        let mut cfg = ExperimentConfig::default();
        cfg.validate(&reg).unwrap();
        cfg.model = ModelConfig::Quadratic;
        assert!(cfg.validate(&reg).is_err());
        cfg.dataset.kind = DatasetKind::None;
        cfg.validate(&reg).unwrap();
        cfg.optimizer = "adam".into();
        assert!(matches!(cfg.validate(&reg), Err(Error::UnknownOptimizer(_))));
    }

    #[test]
    fn snapshot_schedule_includes_last() {
        let mut cfg = ExperimentConfig {
            epochs: 12,
            ..Default::default()
        };
        assert_eq!(cfg.snapshot_schedule(), vec![1, 5, 12]);
        cfg.epochs = 20;
        assert_eq!(cfg.snapshot_schedule(), vec![1, 5, 20]);
    }

    #[test]
    fn labels() {
        let mut cfg = ExperimentConfig::default();
        cfg.hyper = cfg.hyper.with_rhos(0.5, 0.9);
        assert_eq!(cfg.display_label(), "adasmooth(0.5,0.9)");
        assert_eq!(ExperimentConfig::for_optimizer("sgd").unwrap().display_label(), "sgd(eta=0.01)");
    }
}
