//! Datasets, splits, normalization, and mini-batch plans.

mod batches;
mod census;
mod idx;
mod synth;

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

pub use batches::{BatchPlan, BatchSlot, EpochBatches};
pub use census::{load_census_csv, load_census_dir, load_census_files, CensusReport, CENSUS_FILES};
pub use idx::{load_mnist, parse_idx, IdxArray, MnistData, MNIST_TEST_FILES, MNIST_TRAIN_FILES};
pub use synth::{synth_dataset, SynthKind};

use crate::error::{Error, Result};
use crate::models::Batch;
use crate::rng::{shuffle_indices, Rng};

/// z-score statistics applied to a set of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub feature_names: Vec<String>,
    pub classes: usize,
    /// Columns holding continuous values (candidates for z-scoring).
    pub continuous: Vec<usize>,
    pub normalization: Option<Normalization>,
    /// Free-form preprocessing notes, e.g. pixel scaling.
    pub notes: Vec<String>,
}

/// Row-major feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, n_features: usize, meta: DatasetMeta) -> Result<Self> {
        if labels.is_empty() || n_features == 0 {
            return Err(Error::Dataset(format!(
                "{}: dataset must have at least one row and one feature",
                meta.name
            )));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Dataset(format!(
                "{}: {} feature values do not form {} rows of {}",
                meta.name,
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= meta.classes) {
            return Err(Error::Dataset(format!(
                "{}: label {bad} not below class count {}",
                meta.name, meta.classes
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!(
                "{}: non-finite feature at row {}, column {}",
                meta.name,
                pos / n_features,
                pos % n_features
            )));
        }
        Ok(Dataset {
            features,
            labels,
            n_features,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn classes(&self) -> usize {
        self.meta.classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> Batch<'_> {
        Batch {
            features: &self.features,
            labels: &self.labels,
            n_features: self.n_features,
        }
    }

    /// Copies the given rows, in order, into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let mut buf = BatchBuffer::default();
        buf.fill(self, indices);
        Dataset::new(buf.features, buf.labels, self.n_features, self.meta.clone())
    }

    /// Per-class label counts.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.meta.classes];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    /// A seeded random subset of `n` rows (the whole set, shuffled, if `n >= len`).
    pub fn subset(&self, n: usize, rng: &mut Rng) -> Result<Dataset> {
        let mut idx = shuffle_indices(self.len(), rng);
        idx.truncate(n.min(self.len()));
        self.select(&idx)
    }
}

/// Reusable storage for gathered mini-batches.
#[derive(Debug, Clone, Default)]
pub struct BatchBuffer {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n_features: usize,
}

impl BatchBuffer {
    pub fn fill(&mut self, ds: &Dataset, indices: &[usize]) {
        self.features.clear();
        self.labels.clear();
        self.n_features = ds.n_features;
        for &i in indices {
            self.features.extend_from_slice(ds.row(i));
            self.labels.push(ds.labels[i]);
        }
    }

    pub fn as_batch(&self) -> Batch<'_> {
        Batch {
            features: &self.features,
            labels: &self.labels,
            n_features: self.n_features,
        }
    }
}

/// Seeded split into `ceil(fraction * n)` training rows and the remainder.
pub fn train_test_split(ds: &Dataset, fraction: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let n = ds.len();
    // Guard against 0.7 * 10 = 7.000000000000001 rounding up to 8.
    let k = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if k == 0 || k >= n {
        return Err(Error::Dataset(format!(
            "split of {n} rows at {fraction} leaves an empty side"
        )));
    }
    let perm = shuffle_indices(n, rng);
    Ok((ds.select(&perm[..k])?, ds.select(&perm[k..])?))
}

/// z-score transform fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    stats: Normalization,
}

impl Standardizer {
    /// Fits mean and population standard deviation of `ds`'s continuous columns.
    pub fn fit(ds: &Dataset) -> Self {
        let columns = ds.meta.continuous.clone();
        let n = ds.len() as f64;
        let mut mean = Vec::with_capacity(columns.len());
        let mut std = Vec::with_capacity(columns.len());
        for &c in &columns {
            let m = (0..ds.len()).map(|i| ds.row(i)[c]).sum::<f64>() / n;
            let var = (0..ds.len()).map(|i| (ds.row(i)[c] - m).powi(2)).sum::<f64>() / n;
            mean.push(m);
            std.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardizer {
            stats: Normalization { columns, mean, std },
        }
    }

    pub fn stats(&self) -> &Normalization {
        &self.stats
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let mut out = ds.clone();
        let f = out.n_features;
        for row in out.features.chunks_exact_mut(f) {
            for (j, &c) in self.stats.columns.iter().enumerate() {
                row[c] = (row[c] - self.stats.mean[j]) / self.stats.std[j];
            }
        }
        out.meta.normalization = Some(self.stats.clone());
        Ok(out)
    }
}

/// Opens `path`, transparently decompressing `.gz` files.
pub(crate) fn open_data_file(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

pub(crate) fn read_data_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    open_data_file(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

/// `dir/name` or `dir/name.gz`, whichever exists.
pub(crate) fn find_data_file(dir: &Path, name: &str) -> Option<PathBuf> {
    [dir.join(name), dir.join(format!("{name}.gz"))]
        .into_iter()
        .find(|p| p.is_file())
}
