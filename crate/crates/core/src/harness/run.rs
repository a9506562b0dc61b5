use std::collections::hash_map::DefaultHasher;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{fmt_f64, CsvMetricsWriter, ErSnapshot, MetricsFormat, MetricsRecord};
use super::{step_histogram, write_metrics, DatasetKind, ExperimentConfig, ModelConfig};
use crate::data::{
    load_census_dir, load_mnist, synth_dataset, train_test_split, BatchBuffer, BatchPlan, Dataset,
    Standardizer, SynthKind,
};
use crate::error::{Error, Result};
use crate::models::{evaluate, Batch, GradOracle};
use crate::optim::{OptimizerInit, OptimizerRegistry, WindowMode};
use crate::param::ParamVector;
use crate::rng::{streams, Rng};

/// Training and (optional) held-out data for a run.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Option<Dataset>,
    pub test: Option<Dataset>,
    /// Human-readable preprocessing summary, e.g. dropped-row counts.
    pub notes: Vec<String>,
}

impl PreparedData {
    pub fn none() -> Self {
        PreparedData {
            train: None,
            test: None,
            notes: Vec::new(),
        }
    }
}

/// Loads, splits, normalizes and subsamples the configured dataset.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let dc = &cfg.dataset;
    let mut notes = Vec::new();
    let (train, test) = match dc.kind {
        DatasetKind::None => return Ok(PreparedData::none()),
        DatasetKind::Mnist => {
            let m = load_mnist(&dc.resolved_dir())?;
            if m.test.is_none() {
                notes.push("no t10k files found; test metrics omitted".into());
            }
            (m.train, m.test)
        }
        DatasetKind::Census => {
            let (all, report) = load_census_dir(&dc.resolved_dir())?;
            notes.push(format!(
                "census: {} rows read, {} dropped for missing values, {} malformed, {} kept",
                report.rows_read, report.dropped_missing, report.malformed, report.kept
            ));
            let (train, test) =
                train_test_split(&all, dc.train_fraction, &mut Rng::derive(cfg.seed, streams::SPLIT))?;
            let z = Standardizer::fit(&train);
            (z.apply(&train)?, Some(z.apply(&test)?))
        }
        DatasetKind::Blobs => {
            let all = synth_dataset(
                SynthKind::blobs(),
                dc.blobs_samples,
                &mut Rng::derive(cfg.seed, streams::SYNTH),
            )?;
            let (train, test) =
                train_test_split(&all, dc.train_fraction, &mut Rng::derive(cfg.seed, streams::SPLIT))?;
            (train, Some(test))
        }
    };
    let train = match dc.subset {
        Some(n) => {
            notes.push(format!("training subset of {} rows", n.min(train.len())));
            train.subset(n, &mut Rng::derive(cfg.seed, streams::SUBSET))?
        }
        None => train,
    };
    Ok(PreparedData {
        train: Some(train),
        test,
        notes,
    })
}

/// End-of-epoch per-parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    /// ERs used by the epoch's last step.
    pub er: Option<ParamVector>,
    pub delta: ParamVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchLoss {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub records: Vec<MetricsRecord>,
    pub initial_params: ParamVector,
    pub final_params: ParamVector,
    /// Hash of the initial parameter bits; equal across runs sharing a seed and model.
    pub init_hash: u64,
    /// Hash of every epoch's batch order.
    pub batch_hash: u64,
    pub snapshots: Vec<Snapshot>,
    pub per_batch: Vec<BatchLoss>,
    /// Wall-clock seconds per epoch. Kept out of the metrics files so they replay byte for byte.
    pub epoch_seconds: Vec<f64>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn best_train_accuracy(&self) -> Option<f64> {
        best(self.records.iter().filter_map(|r| r.train_accuracy))
    }

    pub fn best_test_accuracy(&self) -> Option<f64> {
        best(self.records.iter().filter_map(|r| r.test_accuracy))
    }

    pub fn final_train_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.train_loss)
    }

    pub fn snapshot(&self, epoch: usize) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.epoch == epoch)
    }
}

fn best(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

fn hash_params(p: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in p {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn non_finite(epoch: usize, batch: usize, dimension: Option<usize>, what: &str) -> Error {
    Error::NonFinite {
        epoch,
        batch,
        dimension,
        what: what.into(),
    }
}

/// Loads the configured data and trains.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let data = prepare_data(cfg)?;
    run_with_data(cfg, &data, &OptimizerRegistry::builtin())
}

/// Trains on already prepared data. If `cfg.out` is set, outputs are written there.
pub fn run_with_data(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    registry: &OptimizerRegistry,
) -> Result<RunOutput> {
    cfg.validate(registry)?;
    let model: Box<dyn GradOracle> = match &data.train {
        Some(ds) => cfg.model.build(ds.n_features(), ds.classes())?,
        None => cfg.model.build(0, 0)?,
    };
    let mut params = model.init_params(&mut Rng::derive(cfg.seed, streams::INIT))?;
    let initial_params = params.clone();
    let init_hash = hash_params(&params);
    let d = params.len();
    let mut opt = registry.build(
        &cfg.optimizer,
        cfg.hyper,
        OptimizerInit::new(d)
            .with_window(cfg.window)
            .with_rng(Rng::derive(cfg.seed, streams::OPTIMIZER)),
    )?;
    let mut dropout_rng = Rng::derive(cfg.seed, streams::DROPOUT);
    let rows = data.train.as_ref().map_or(1, Dataset::len);
    let plan = BatchPlan::new(rows, cfg.batch_size)?;
    let schedule = cfg.snapshot_schedule();

    let mut csv = match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            std::fs::write(dir.join("config-echo.json"), cfg.to_json_pretty()? + "\n")
                .map_err(|e| Error::io(dir.join("config-echo.json"), e))?;
            Some(CsvMetricsWriter::create(&dir.join("metrics.csv"))?)
        }
        None => None,
    };

    let mut buf = BatchBuffer::default();
    let mut batch_hasher = DefaultHasher::new();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut snapshots = Vec::new();
    let mut per_batch = Vec::new();
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let batches = plan.epoch(&mut Rng::derive(cfg.seed, streams::BATCHES + epoch as u64));
        batches.order().hash(&mut batch_hasher);
        let mut loss_sum = 0.0;
        let mut last = None;
        for slot in batches.iter() {
            let bno = slot.index + 1;
            let batch = match &data.train {
                Some(ds) => {
                    buf.fill(ds, slot.indices);
                    buf.as_batch()
                }
                None => Batch::empty(),
            };
            let mask = model.sample_mask(batch.rows(), &mut dropout_rng);
            let (loss, grad) = model.eval(&params, &batch, mask.as_ref())?;
            if !loss.is_finite() {
                return Err(non_finite(epoch, bno, None, "batch loss"));
            }
            if let Some(i) = grad.first_non_finite() {
                return Err(non_finite(epoch, bno, Some(i), "gradient"));
            }
            let step = opt.step(&grad)?;
            if let Some(i) = step.delta.first_non_finite() {
                return Err(non_finite(epoch, bno, Some(i), "parameter update"));
            }
            // Resetting before recording the epoch's last step leaves exactly
            // that step in the window, so the next epoch's first batch sees M = 1.
            if slot.is_last() && cfg.window == WindowMode::Epoch {
                opt.window_reset();
            }
            opt.record_step(&step.delta)?;
            params.add_assign(&step.delta)?;
            if let Some(i) = params.first_non_finite() {
                return Err(non_finite(epoch, bno, Some(i), "parameters"));
            }
            loss_sum += loss;
            if cfg.per_batch {
                per_batch.push(BatchLoss {
                    epoch,
                    batch: bno,
                    loss,
                });
            }
            last = Some(step);
        }
        let last = last.expect("every epoch has at least one batch");

        let (train_eval, test_eval) = if model.classes().is_some() {
            let train = data.train.as_ref().map(|ds| evaluate(model.as_ref(), &params, &ds.as_batch()));
            let test = data.test.as_ref().map(|ds| evaluate(model.as_ref(), &params, &ds.as_batch()));
            (train.transpose()?, test.transpose()?)
        } else {
            (None, None)
        };
        let record = MetricsRecord {
            epoch,
            train_loss: loss_sum / batches.len() as f64,
            train_accuracy: train_eval.map(|e| e.accuracy),
            test_loss: test_eval.map(|e| e.loss),
            test_accuracy: test_eval.map(|e| e.accuracy),
            er: last.er.as_ref().map(|e| ErSnapshot::from_values(e)),
            step_histogram: step_histogram(&last.delta),
        };
        if let Some(w) = csv.as_mut() {
            w.append(&record)?;
        }
        records.push(record);
        if schedule.contains(&epoch) {
            snapshots.push(Snapshot {
                epoch,
                er: last.er,
                delta: last.delta,
            });
        }
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }
    drop(csv);

    let mut notes = data.notes.clone();
    if let ModelConfig::Mlp { .. } = cfg.model {
        notes.push("test metrics use evaluation mode (no dropout)".into());
    }
    let out = RunOutput {
        config: cfg.clone(),
        records,
        final_params: params,
        initial_params,
        init_hash,
        batch_hash: batch_hasher.finish(),
        snapshots,
        per_batch,
        epoch_seconds,
        notes,
    };
    if let Some(dir) = &cfg.out {
        write_run_files(&out, dir)?;
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes the end-of-run files next to the incrementally written metrics.csv.
fn write_run_files(out: &RunOutput, dir: &Path) -> Result<()> {
    write_metrics(&out.records, MetricsFormat::Json, &dir.join("metrics.json"))?;
    for s in &out.snapshots {
        if let Some(er) = &s.er {
            let path = dir.join(format!("er_epoch{}.csv", s.epoch));
            let mut w = create(&path)?;
            writeln!(w, "index,er").map_err(|e| Error::io(&path, e))?;
            for (i, e) in er.iter().enumerate() {
                writeln!(w, "{i},{}", fmt_f64(*e)).map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        let path = dir.join(format!("steps_epoch{}.csv", s.epoch));
        let mut w = create(&path)?;
        writeln!(w, "index,delta").map_err(|e| Error::io(&path, e))?;
        for (i, d) in s.delta.iter().enumerate() {
            writeln!(w, "{i},{}", fmt_f64(*d)).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    if out.config.per_batch {
        let path = dir.join("per_batch.csv");
        let mut w = create(&path)?;
        writeln!(w, "epoch,batch,loss").map_err(|e| Error::io(&path, e))?;
        for b in &out.per_batch {
            writeln!(w, "{},{},{}", b.epoch, b.batch, fmt_f64(b.loss)).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join("timing.csv");
    let mut w = create(&path)?;
    writeln!(w, "epoch,seconds").map_err(|e| Error::io(&path, e))?;
    for (i, s) in out.epoch_seconds.iter().enumerate() {
        writeln!(w, "{},{s:.6}", i + 1).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
