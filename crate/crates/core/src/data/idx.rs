//! The IDX container used by the MNIST distribution.

use std::path::Path;

use super::{find_data_file, read_data_file, Dataset, DatasetMeta};
use crate::error::{Error, Result};

/// A decoded IDX file of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    /// Re-encodes the array; `parse_idx(&a.to_bytes())` yields `a` again.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.data.len());
        out.extend_from_slice(&[0, 0, 0x08, self.dims.len() as u8]);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }
}

fn idx_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Idx {
        offset,
        message: message.into(),
    }
}

/// Parses an IDX file whose element type is unsigned byte (`0x08`).
pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(idx_err(bytes.len(), format!("header needs 4 bytes, file has {}", bytes.len())));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(idx_err(0, format!("bad magic {:02x}{:02x}, expected 0000", bytes[0], bytes[1])));
    }
    if bytes[2] != 0x08 {
        return Err(idx_err(2, format!("element type 0x{:02x} unsupported, expected 0x08", bytes[2])));
    }
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(idx_err(3, "zero dimensions"));
    }
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(idx_err(
            bytes.len(),
            format!("header declares {ndims} dimensions ({header} bytes), file has {}", bytes.len()),
        ));
    }
    let mut dims = Vec::with_capacity(ndims);
    let mut count: usize = 1;
    for k in 0..ndims {
        let at = 4 + 4 * k;
        let d = u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4-byte slice")) as usize;
        count = count
            .checked_mul(d)
            .ok_or_else(|| idx_err(at, "dimension product overflows"))?;
        dims.push(d);
    }
    let payload = bytes.len() - header;
    if payload != count {
        let what = if payload < count { "truncated payload" } else { "trailing bytes after payload" };
        return Err(idx_err(
            header,
            format!("{what}: expected {count} bytes, got {payload}"),
        ));
    }
    Ok(IdxArray {
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub const MNIST_TRAIN_FILES: [&str; 2] = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte"];
pub const MNIST_TEST_FILES: [&str; 2] = ["t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"];

#[derive(Debug, Clone)]
pub struct MnistData {
    pub train: Dataset,
    /// Present when the `t10k` files are found.
    pub test: Option<Dataset>,
}

/// Loads MNIST from `dir`, accepting plain or `.gz` files. Pixels are scaled to `[0, 1]`.
pub fn load_mnist(dir: &Path) -> Result<MnistData> {
    let find = |name: &str| {
        find_data_file(dir, name).ok_or_else(|| Error::MissingData {
            path: dir.join(name),
            hint: format!(
                "MNIST needs {} and {} (optionally .gz) in the data directory; set --data-dir or ADASMOOTH_DATA_DIR",
                MNIST_TRAIN_FILES[0], MNIST_TRAIN_FILES[1]
            ),
        })
    };
    let train = load_pair(&find(MNIST_TRAIN_FILES[0])?, &find(MNIST_TRAIN_FILES[1])?, "mnist-train")?;
    let test = match (
        find_data_file(dir, MNIST_TEST_FILES[0]),
        find_data_file(dir, MNIST_TEST_FILES[1]),
    ) {
        (Some(images), Some(labels)) => Some(load_pair(&images, &labels, "mnist-test")?),
        _ => None,
    };
    Ok(MnistData { train, test })
}

fn load_pair(images: &Path, labels: &Path, name: &str) -> Result<Dataset> {
    let img = parse_idx(&read_data_file(images)?)?;
    let lab = parse_idx(&read_data_file(labels)?)?;
    if img.dims.len() != 3 {
        return Err(Error::Dataset(format!("{images:?}: expected a 3-D image file, got dims {:?}", img.dims)));
    }
    if lab.dims.len() != 1 {
        return Err(Error::Dataset(format!("{labels:?}: expected a 1-D label file, got dims {:?}", lab.dims)));
    }
    if img.dims[0] != lab.dims[0] {
        return Err(Error::Dataset(format!(
            "{} images but {} labels",
            img.dims[0], lab.dims[0]
        )));
    }
    let pixels = img.dims[1] * img.dims[2];
    let features = img.data.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels = lab.data.iter().map(|&l| l as usize).collect();
    let meta = DatasetMeta {
        name: name.into(),
        feature_names: (0..pixels).map(|i| format!("px{i}")).collect(),
        classes: 10,
        continuous: Vec::new(),
        normalization: None,
        notes: vec!["pixels divided by 255, no centering".into()],
    };
    Dataset::new(features, labels, pixels, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert_eq, proptest};

    #[test]
    fn label_file() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 1];
        let a = parse_idx(&bytes).unwrap();
        assert_eq!(a.dims, vec![3]);
        assert_eq!(a.data, vec![7, 2, 1]);
    }

    #[test]
    fn truncated_payload_names_counts() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3];
        let msg = parse_idx(&bytes).unwrap_err().to_string();
        assert!(msg.contains("expected 8 bytes, got 3"), "{msg}");
        assert!(msg.contains("byte 16"), "{msg}");
    }

    #[test]
    fn bad_headers() {
        assert!(matches!(parse_idx(&[1, 0, 8, 1]), Err(Error::Idx { offset: 0, .. })));
        assert!(matches!(parse_idx(&[0, 0, 0x0d, 1]), Err(Error::Idx { offset: 2, .. })));
        assert!(matches!(parse_idx(&[0, 0, 8, 2, 0, 0]), Err(Error::Idx { offset: 6, .. })));
        assert!(parse_idx(&[0, 0, 8]).is_err());
    }

    #[cfg(target_pointer_width = "64")]
    #[test]
    fn dimension_overflow() {
        let mut bytes = vec![0, 0, 8, 3];
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_be_bytes());
        }
        assert!(parse_idx(&bytes).unwrap_err().to_string().contains("overflow"));
    }

    #[test]
    fn missing_files_error_names_them() {
        let dir = tempfile::tempdir().unwrap();
        let msg = load_mnist(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("train-images-idx3-ubyte"), "{msg}");
        assert!(msg.contains("train-labels-idx1-ubyte"), "{msg}");
    }

    #[test]
    fn loads_plain_files_and_scales() {
        let dir = tempfile::tempdir().unwrap();
        let img = IdxArray { dims: vec![2, 2, 2], data: vec![0, 255, 51, 102, 1, 2, 3, 4] };
        let lab = IdxArray { dims: vec![2], data: vec![3, 9] };
        std::fs::write(dir.path().join(MNIST_TRAIN_FILES[0]), img.to_bytes()).unwrap();
        std::fs::write(dir.path().join(MNIST_TRAIN_FILES[1]), lab.to_bytes()).unwrap();
        let m = load_mnist(dir.path()).unwrap();
        assert!(m.test.is_none());
        assert_eq!(m.train.len(), 2);
        assert_eq!(m.train.row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(m.train.labels(), &[3, 9]);
    }

    proptest! {
        #[test]
        fn round_trip(dims in proptest::collection::vec(0usize..6, 1..4), seed in any::<u8>()) {
            let n: usize = dims.iter().product();
            let data: Vec<u8> = (0..n).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
            let bytes = IdxArray { dims, data }.to_bytes();
            prop_assert_eq!(parse_idx(&bytes).unwrap().to_bytes(), bytes);
        }
    }
}
