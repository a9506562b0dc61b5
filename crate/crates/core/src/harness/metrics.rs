use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Optimizer, StepResult};

/// ER histogram bins over `[0, 1]`; 1.0 falls in the last bin.
pub const ER_BINS: usize = 50;
pub const ER_BIN_WIDTH: f64 = 0.02;
pub const ER_THRESHOLDS: [f64; 4] = [0.02, 0.04, 0.06, 0.1];

/// Lower edges of the `|dx|` histogram bins after the first. Bin 0 is
/// `[0, 1e-12)`, bin `k` is `[STEP_BIN_EDGES[k-1], STEP_BIN_EDGES[k])`, and
/// the last bin is `[1, inf)`.
pub const STEP_BIN_EDGES: [f64; 13] = [
    1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0,
];

/// Distribution of effective ratios over parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErSnapshot {
    pub histogram: Vec<u64>,
    /// Share of parameters with ER strictly above each of [`ER_THRESHOLDS`].
    pub fractions: [f64; 4],
}

impl ErSnapshot {
    pub fn from_values(er: &[f64]) -> Self {
        let mut histogram = vec![0u64; ER_BINS];
        let mut above = [0usize; 4];
        for &e in er {
            let bin = ((e / ER_BIN_WIDTH).floor().max(0.0) as usize).min(ER_BINS - 1);
            histogram[bin] += 1;
            for (count, &t) in above.iter_mut().zip(&ER_THRESHOLDS) {
                if e > t {
                    *count += 1;
                }
            }
        }
        let d = er.len().max(1) as f64;
        ErSnapshot {
            histogram,
            fractions: above.map(|c| c as f64 / d),
        }
    }

    /// Snapshot of the ratios an optimizer step used.
    pub fn from_step(step: &StepResult) -> Result<Self> {
        step.er
            .as_ref()
            .map(|e| Self::from_values(e))
            .ok_or_else(|| Error::Unsupported("step carries no effective ratios".into()))
    }
}

/// Snapshot of an optimizer's current ER window. Fails for optimizers that do not use ERs.
pub fn er_snapshot(opt: &dyn Optimizer) -> Result<ErSnapshot> {
    if !opt.uses_effective_ratio() {
        return Err(Error::Unsupported(format!(
            "{} does not track effective ratios",
            opt.name()
        )));
    }
    Ok(ErSnapshot::from_values(&opt.window().effective_ratio()))
}

/// Counts of `|dx|` over the log-spaced bins described by [`STEP_BIN_EDGES`].
pub fn step_histogram(delta: &[f64]) -> Vec<u64> {
    let mut h = vec![0u64; STEP_BIN_EDGES.len() + 1];
    for d in delta {
        let a = d.abs();
        h[STEP_BIN_EDGES.partition_point(|&edge| edge <= a)] += 1;
    }
    h
}

/// One epoch of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    /// Mean training-mode batch loss over the epoch.
    pub train_loss: f64,
    /// Evaluation-mode accuracy on the whole training split.
    pub train_accuracy: Option<f64>,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// ER distribution used by the epoch's last step (ER-based optimizers only).
    pub er: Option<ErSnapshot>,
    /// `|dx|` distribution of the epoch's last step.
    pub step_histogram: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsFormat {
    Csv,
    Json,
}

const CSV_HEADER: [&str; 11] = [
    "epoch",
    "train_loss",
    "train_accuracy",
    "test_loss",
    "test_accuracy",
    "er_frac_gt_0.02",
    "er_frac_gt_0.04",
    "er_frac_gt_0.06",
    "er_frac_gt_0.1",
    "er_hist",
    "step_hist",
];

/// 17 significant digits, enough to reproduce the exact double.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn fmt_counts(c: &[u64]) -> String {
    c.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

pub(crate) fn csv_row(r: &MetricsRecord) -> Vec<String> {
    let frac = |i: usize| fmt_opt(r.er.as_ref().map(|e| e.fractions[i]));
    vec![
        r.epoch.to_string(),
        fmt_f64(r.train_loss),
        fmt_opt(r.train_accuracy),
        fmt_opt(r.test_loss),
        fmt_opt(r.test_accuracy),
        frac(0),
        frac(1),
        frac(2),
        frac(3),
        r.er.as_ref().map(|e| fmt_counts(&e.histogram)).unwrap_or_default(),
        fmt_counts(&r.step_histogram),
    ]
}

/// Appends epoch rows to a metrics CSV as they are produced.
pub(crate) struct CsvMetricsWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvMetricsWriter {
    pub(crate) fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(CSV_HEADER)?;
        inner.flush().map_err(|e| Error::io(path, e))?;
        Ok(CsvMetricsWriter { inner })
    }

    pub(crate) fn append(&mut self, r: &MetricsRecord) -> Result<()> {
        self.inner.write_record(csv_row(r))?;
        self.inner.flush().map_err(|e| Error::io("metrics.csv", e))
    }
}

/// Writes `records` to `path` in the given format.
pub fn write_metrics(records: &[MetricsRecord], format: MetricsFormat, path: &Path) -> Result<()> {
    match format {
        MetricsFormat::Csv => {
            let mut w = CsvMetricsWriter::create(path)?;
            for r in records {
                w.append(r)?;
            }
            Ok(())
        }
        MetricsFormat::Json => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, records)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::invalid(format!("bad {what} field {s:?} in metrics CSV")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, what).map(Some)
    }
}

fn parse_counts(s: &str) -> Result<Vec<u64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|c| parse_field(c, "histogram")).collect()
}

/// Parses a CSV produced by [`write_metrics`].
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::invalid(format!("unexpected metrics header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let er = if f(9).is_empty() {
            None
        } else {
            let mut fractions = [0.0; 4];
            for (k, slot) in fractions.iter_mut().enumerate() {
                *slot = parse_field(f(5 + k), "ER fraction")?;
            }
            Some(ErSnapshot {
                histogram: parse_counts(f(9))?,
                fractions,
            })
        };
        out.push(MetricsRecord {
            epoch: parse_field(f(0), "epoch")?,
            train_loss: parse_field(f(1), "train_loss")?,
            train_accuracy: parse_opt(f(2), "train_accuracy")?,
            test_loss: parse_opt(f(3), "test_loss")?,
            test_accuracy: parse_opt(f(4), "test_accuracy")?,
            er,
            step_histogram: parse_counts(f(10))?,
        });
    }
    Ok(out)
}

pub fn read_metrics_json(text: &str) -> Result<Vec<MetricsRecord>> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{HyperParams, OptimizerInit, OptimizerRegistry};
    use crate::param::ParamVector;

    fn record(epoch: usize) -> MetricsRecord {
        MetricsRecord {
            epoch,
            train_loss: 0.1 + epoch as f64 / 3.0,
            train_accuracy: Some(0.84925),
            test_loss: None,
            test_accuracy: None,
            er: Some(ErSnapshot::from_values(&[0.0, 0.03, 0.5, 1.0])),
            step_histogram: step_histogram(&[0.0, 1e-3, 2.0]),
        }
    }

    #[test]
    fn all_ones_and_all_zeros() {
        let ones = ErSnapshot::from_values(&[1.0; 7]);
        assert_eq!(ones.histogram[ER_BINS - 1], 7);
        assert_eq!(ones.fractions, [1.0; 4]);
        let zeros = ErSnapshot::from_values(&[0.0; 7]);
        assert_eq!(zeros.histogram[0], 7);
        assert_eq!(zeros.fractions, [0.0; 4]);
    }

    #[test]
    fn histograms_sum_to_dimension_and_fractions_decrease() {
        let mut rng = crate::rng::Rng::from_seed(8);
        for _ in 0..100 {
            let d = 1 + rng.below(300);
            let er: Vec<f64> = (0..d).map(|_| rng.next_f64()).collect();
            let s = ErSnapshot::from_values(&er);
            assert_eq!(s.histogram.iter().sum::<u64>(), d as u64);
            assert!(s.fractions.windows(2).all(|w| w[0] >= w[1]));
            assert!(s.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
            let steps: Vec<f64> = er.iter().map(|e| (e - 0.5) * 10f64.powi(rng.below(16) as i32 - 13)).collect();
            assert_eq!(step_histogram(&steps).iter().sum::<u64>(), d as u64);
        }
    }

    #[test]
    fn bin_edges() {
        assert_eq!(ErSnapshot::from_values(&[0.02]).histogram[1], 1);
        assert_eq!(ErSnapshot::from_values(&[0.02]).fractions[0], 0.0);
        let h = step_histogram(&[0.0, 5e-13, 1e-12, 0.5, -1.0, 1e9]);
        assert_eq!(h[0], 2);
        assert_eq!(h[1], 1);
        assert_eq!(h[12], 1);
        assert_eq!(h[13], 2);
    }

    #[test]
    fn non_er_optimizer_is_rejected() {
        let reg = OptimizerRegistry::builtin();
        let sgd = reg.build("sgd", HyperParams::default(), OptimizerInit::new(3)).unwrap();
        assert!(er_snapshot(sgd.as_ref()).is_err());
        let ada = reg.build("adasmooth", HyperParams::default(), OptimizerInit::new(3)).unwrap();
        assert_eq!(er_snapshot(ada.as_ref()).unwrap().fractions, [1.0; 4]);
        let plain = StepResult { delta: ParamVector::zeros(3), er: None, ssc: None };
        assert!(ErSnapshot::from_step(&plain).is_err());
    }

    #[test]
    fn empty_csv_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics(&[], MetricsFormat::Csv, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("epoch,train_loss,"));
        assert!(parse_metrics_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs: Vec<MetricsRecord> = (1..5).map(record).collect();
        recs[2].er = None;
        recs[3].test_loss = Some(std::f64::consts::PI);
        let p = dir.path().join("m.csv");
        write_metrics(&recs, MetricsFormat::Csv, &p).unwrap();
        assert_eq!(parse_metrics_csv(&std::fs::read_to_string(&p).unwrap()).unwrap(), recs);
        let j = dir.path().join("m.json");
        write_metrics(&recs, MetricsFormat::Json, &j).unwrap();
        assert_eq!(read_metrics_json(&std::fs::read_to_string(&j).unwrap()).unwrap(), recs);
    }

    #[test]
    fn known_record_digits() {
        let row = csv_row(&record(1)).join(",");
        assert_eq!(
            row,
            "1,4.3333333333333335e-1,8.4924999999999995e-1,,,7.5000000000000000e-1,\
             5.0000000000000000e-1,5.0000000000000000e-1,5.0000000000000000e-1,\
             1;1;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;1;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;0;1,\
             1;0;0;0;0;0;0;0;0;0;1;0;0;1"
        );
    }

    #[test]
    fn unwritable_path() {
        let err = write_metrics(&[], MetricsFormat::Csv, Path::new("/nonexistent/dir/m.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
