use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;

use super::metrics::fmt_f64;
use super::run::{prepare_data, run_with_data, PreparedData, RunOutput};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::optim::OptimizerRegistry;

/// Runs of several optimizers over identical data, initialization and batch orders.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub dataset: String,
    pub runs: Vec<RunOutput>,
}

/// The part of a config that every compared run must share.
fn shared_part(cfg: &ExperimentConfig) -> Result<Value> {
    let mut c = cfg.clone();
    c.label = None;
    c.optimizer = String::new();
    c.hyper = Default::default();
    c.out = None;
    Ok(serde_json::to_value(c)?)
}

/// Loads the data once and runs every config in parallel. Results keep config order.
pub fn compare(cfgs: &[ExperimentConfig]) -> Result<Comparison> {
    let first = cfgs
        .first()
        .ok_or_else(|| Error::invalid("compare needs at least one config"))?;
    check_shared(cfgs)?;
    let data = prepare_data(first)?;
    compare_with_data(cfgs, &data, &OptimizerRegistry::builtin())
}

fn check_shared(cfgs: &[ExperimentConfig]) -> Result<()> {
    let Some(first) = cfgs.first() else {
        return Err(Error::invalid("compare needs at least one config"));
    };
    let key = shared_part(first)?;
    for c in &cfgs[1..] {
        if shared_part(c)? != key {
            return Err(Error::invalid(format!(
                "config {:?} differs from {:?} in more than optimizer settings",
                c.display_label(),
                first.display_label()
            )));
        }
    }
    let mut labels: Vec<String> = cfgs.iter().map(ExperimentConfig::display_label).collect();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("compared runs need distinct labels"));
    }
    Ok(())
}

pub fn compare_with_data(
    cfgs: &[ExperimentConfig],
    data: &PreparedData,
    registry: &OptimizerRegistry,
) -> Result<Comparison> {
    check_shared(cfgs)?;
    let runs: Vec<RunOutput> = cfgs
        .par_iter()
        .map(|c| run_with_data(c, data, registry))
        .collect::<Result<_>>()?;
    let (h0, b0) = (runs[0].init_hash, runs[0].batch_hash);
    if runs.iter().any(|r| r.init_hash != h0 || r.batch_hash != b0) {
        return Err(Error::invalid(
            "compared runs saw different initial parameters or batch orders",
        ));
    }
    let dataset = serde_json::to_value(cfgs[0].dataset.kind)?
        .as_str()
        .unwrap_or("data")
        .to_string();
    Ok(Comparison { dataset, runs })
}

impl Comparison {
    pub fn labels(&self) -> Vec<String> {
        self.runs.iter().map(|r| r.config.display_label()).collect()
    }

    pub fn run(&self, label: &str) -> Option<&RunOutput> {
        self.runs.iter().find(|r| r.config.display_label() == label)
    }

    /// One row per epoch with each run's loss and accuracy columns side by side.
    pub fn write_wide_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["epoch".to_string()];
        for l in self.labels() {
            for m in ["train_loss", "train_accuracy", "test_loss", "test_accuracy"] {
                header.push(format!("{l}:{m}"));
            }
        }
        w.write_record(&header)?;
        let epochs = self.runs.iter().map(|r| r.records.len()).max().unwrap_or(0);
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for e in 0..epochs {
            let mut row = vec![(e + 1).to_string()];
            for r in &self.runs {
                match r.records.get(e) {
                    Some(m) => row.extend([
                        fmt_f64(m.train_loss),
                        opt(m.train_accuracy),
                        opt(m.test_loss),
                        opt(m.test_accuracy),
                    ]),
                    None => row.extend(std::iter::repeat_n(String::new(), 4)),
                }
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn best_table(&self) -> BestAccuracyTable {
        BestAccuracyTable::from_comparisons(std::slice::from_ref(self))
    }
}

/// Best-over-epochs train accuracy: one row per optimizer, one column per dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BestAccuracyTable {
    pub datasets: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl BestAccuracyTable {
    pub fn from_comparisons(comparisons: &[Comparison]) -> Self {
        let datasets: Vec<String> = comparisons.iter().map(|c| c.dataset.clone()).collect();
        let mut rows: Vec<(String, Vec<Option<f64>>)> = Vec::new();
        for (j, c) in comparisons.iter().enumerate() {
            for r in &c.runs {
                let label = r.config.display_label();
                let idx = match rows.iter().position(|(l, _)| *l == label) {
                    Some(i) => i,
                    None => {
                        rows.push((label, vec![None; comparisons.len()]));
                        rows.len() - 1
                    }
                };
                rows[idx].1[j] = r.best_train_accuracy();
            }
        }
        BestAccuracyTable { datasets, rows }
    }

    /// Accuracies as percentages with two decimals; blank where a run is missing.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once("optimizer").chain(self.datasets.iter().map(String::as_str)))?;
        for (label, vals) in &self.rows {
            let cells = vals
                .iter()
                .map(|v| v.map(|a| format!("{:.2}", a * 100.0)).unwrap_or_default());
            w.write_record(std::iter::once(label.clone()).chain(cells))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("table", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}
