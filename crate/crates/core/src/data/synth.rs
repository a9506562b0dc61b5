use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::models::QuadraticModel;
use crate::rng::Rng;

/// Synthetic dataset families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SynthKind {
    /// Unit-variance isotropic Gaussians. Class centres are pairwise
    /// `separation` standard deviations apart.
    GaussianBlobs {
        classes: usize,
        features: usize,
        separation: f64,
    },
    /// Points uniform on `[-10, 10]^2`, labelled 1 where the ravine
    /// quadratic is below `level`.
    QuadraticProbe { level: f64 },
}

impl SynthKind {
    pub const fn blobs() -> Self {
        SynthKind::GaussianBlobs {
            classes: 2,
            features: 2,
            separation: 10.0,
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-blobs" | "blobs" => Ok(Self::blobs()),
            "quadratic-probe" => Ok(SynthKind::QuadraticProbe { level: 500.0 }),
            _ => Err(Error::invalid(format!("unknown synthetic dataset {s:?}"))),
        }
    }
}

/// Draws `n >= 2` samples. Blob labels cycle `i % classes`, so every class is populated.
pub fn synth_dataset(kind: SynthKind, n: usize, rng: &mut Rng) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::invalid(format!("synthetic dataset needs n >= 2, got {n}")));
    }
    match kind {
        SynthKind::GaussianBlobs {
            classes,
            features,
            separation,
        } => {
            if classes < 2 || features == 0 || !separation.is_finite() {
                return Err(Error::invalid("blobs need classes >= 2, features >= 1, finite separation"));
            }
            let mut x = Vec::with_capacity(n * features);
            let mut y = Vec::with_capacity(n);
            for i in 0..n {
                let c = i % classes;
                let centre = centre(c, classes, features, separation);
                x.extend(centre.iter().map(|m| m + rng.normal()));
                y.push(c);
            }
            let meta = DatasetMeta {
                name: "blobs".into(),
                feature_names: (0..features).map(|j| format!("x{j}")).collect(),
                classes,
                continuous: (0..features).collect(),
                normalization: None,
                notes: vec![format!("{classes} gaussian blobs, separation {separation} sigma")],
            };
            Dataset::new(x, y, features, meta)
        }
        SynthKind::QuadraticProbe { level } => {
            
            let mut x = Vec::with_capacity(2 * n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let p = [rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)];
                y.push(usize::from(QuadraticModel::value(&p) < level));
                x.extend_from_slice(&p);
            }
            let meta = DatasetMeta {
                name: "quadratic-probe".into(),
                feature_names: vec!["x1".into(), "x2".into()],
                classes: 2,
                continuous: vec![0, 1],
                normalization: None,
                notes: vec![format!("label = L(x) < {level}")],
            };
            Dataset::new(x, y, 2, meta)
        }
    }
}

fn centre(c: usize, classes: usize, features: usize, separation: f64) -> Vec<f64> {
    let mut m = vec![0.0; features];
    if classes <= features {
        // scaled basis vectors: |s e_i - s e_j| = s sqrt(2)
        m[c] = separation / std::f64::consts::SQRT_2;
    } else {
        m[0] = separation * c as f64;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_samples_one_per_class() {
        let ds = synth_dataset(SynthKind::blobs(), 2, &mut Rng::from_seed(0)).unwrap();
        assert_eq!(ds.label_histogram(), vec![1, 1]);
        assert!(synth_dataset(SynthKind::blobs(), 1, &mut Rng::from_seed(0)).is_err());
    }

    #[test]
    fn seeded() {
        let a = synth_dataset(SynthKind::blobs(), 100, &mut Rng::from_seed(5)).unwrap();
        let b = synth_dataset(SynthKind::blobs(), 100, &mut Rng::from_seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn centres_are_separated() {
        let ds = synth_dataset(SynthKind::blobs(), 20_000, &mut Rng::from_seed(2)).unwrap();
        let mut sums = [[0.0; 2]; 2];
        for i in 0..ds.len() {
            let c = ds.labels()[i];
            sums[c][0] += ds.row(i)[0];
            sums[c][1] += ds.row(i)[1];
        }
        let m: Vec<[f64; 2]> = sums.iter().map(|s| [s[0] / 10_000.0, s[1] / 10_000.0]).collect();
        let d = ((m[0][0] - m[1][0]).powi(2) + (m[0][1] - m[1][1]).powi(2)).sqrt();
        assert!((d - 10.0).abs() < 0.1, "{d}");
    }

    #[test]
    fn probe_labels_follow_level() {
        let ds = synth_dataset(SynthKind::QuadraticProbe { level: 500.0 }, 500, &mut Rng::from_seed(1)).unwrap();
        for i in 0..ds.len() {
            let expect = QuadraticModel::value(ds.row(i)) < 500.0;
            assert_eq!(ds.labels()[i] == 1, expect);
        }
        assert!(ds.label_histogram().iter().all(|&c| c > 0));
    }

    #[test]
    fn parses_names() {
        assert_eq!("blobs".parse::<SynthKind>().unwrap(), SynthKind::blobs());
        assert!("nope".parse::<SynthKind>().is_err());
    }
}
