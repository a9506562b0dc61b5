//! The Adult / Census Income CSV layout.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::{find_data_file, open_data_file, Dataset, DatasetMeta};
use crate::error::{Error, Result};

/// Files searched for by [`load_census_dir`], in order.
pub const CENSUS_FILES: [&str; 2] = ["adult.data", "adult.test"];

const COLUMNS: [(&str, bool); 14] = [
    ("age", true),
    ("workclass", false),
    ("fnlwgt", true),
    ("education", false),
    ("education-num", true),
    ("marital-status", false),
    ("occupation", false),
    ("relationship", false),
    ("race", false),
    ("sex", false),
    ("capital-gain", true),
    ("capital-loss", true),
    ("hours-per-week", true),
    ("native-country", false),
];

const N_CONTINUOUS: usize = 6;
const N_CATEGORICAL: usize = 8;

/// Row accounting for a Census load.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct CensusReport {
    /// Data rows read, before any filtering.
    pub rows_read: usize,
    pub dropped_missing: usize,
    pub malformed: usize,
    pub kept: usize,
}

struct Record {
    continuous: [f64; N_CONTINUOUS],
    categorical: [String; N_CATEGORICAL],
    label: usize,
}

enum Parsed {
    Row(Box<Record>),
    Missing,
    Malformed,
}

fn parse_label(s: &str) -> Option<usize> {
    match s.trim_end_matches('.') {
        "<=50K" => Some(0),
        ">50K" => Some(1),
        _ => None,
    }
}

fn parse_record(fields: &[&str]) -> Parsed {
    if fields.len() != COLUMNS.len() + 1 {
        return Parsed::Malformed;
    }
    if fields.contains(&"?") {
        return Parsed::Missing;
    }
    let Some(label) = parse_label(fields[COLUMNS.len()]) else {
        return Parsed::Malformed;
    };
    let mut continuous = [0.0; N_CONTINUOUS];
    let mut categorical: [String; N_CATEGORICAL] = Default::default();
    let (mut ci, mut ki) = (0, 0);
    for (field, &(_, is_cont)) in fields.iter().zip(COLUMNS.iter()) {
        if is_cont {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => continuous[ci] = v,
                _ => return Parsed::Malformed,
            }
            ci += 1;
        } else {
            categorical[ki] = (*field).to_string();
            ki += 1;
        }
    }
    Parsed::Row(Box::new(Record {
        continuous,
        categorical,
        label,
    }))
}

fn read_records(path: &Path, report: &mut CensusReport, out: &mut Vec<Record>) -> Result<()> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'|'))
        .trim(csv::Trim::All)
        .from_reader(open_data_file(path)?);
    for (i, rec) in reader.into_records().enumerate() {
        let rec = rec?;
        let fields: Vec<&str> = rec.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0 && fields[0].eq_ignore_ascii_case("age") {
            continue;
        }
        report.rows_read += 1;
        match parse_record(&fields) {
            Parsed::Row(r) => out.push(*r),
            Parsed::Missing => report.dropped_missing += 1,
            Parsed::Malformed => report.malformed += 1,
        }
    }
    Ok(())
}

/// Loads and one-hot encodes one or more Census files with a shared vocabulary.
///
/// Continuous columns come first and are left raw; fit a
/// [`Standardizer`](super::Standardizer) on the training split to z-score them.
pub fn load_census_files(paths: &[PathBuf]) -> Result<(Dataset, CensusReport)> {
    let mut report = CensusReport::default();
    let mut records = Vec::new();
    for p in paths {
        read_records(p, &mut report, &mut records)?;
    }
    report.kept = records.len();
    if records.is_empty() {
        return Err(Error::Dataset(format!("no usable Census rows in {paths:?}")));
    }

    let mut vocab: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); N_CATEGORICAL];
    for r in &records {
        for (k, v) in r.categorical.iter().enumerate() {
            vocab[k].insert(v);
        }
    }
    let mut feature_names: Vec<String> = COLUMNS
        .iter()
        .filter(|c| c.1)
        .map(|c| c.0.to_string())
        .collect();
    let mut offsets = Vec::with_capacity(N_CATEGORICAL);
    for (k, name) in COLUMNS.iter().filter(|c| !c.1).map(|c| c.0).enumerate() {
        offsets.push(feature_names.len());
        feature_names.extend(vocab[k].iter().map(|v| format!("{name}={v}")));
    }
    let vocab: Vec<Vec<&str>> = vocab.into_iter().map(|s| s.into_iter().collect()).collect();

    let f = feature_names.len();
    let mut features = vec![0.0; records.len() * f];
    let mut labels = Vec::with_capacity(records.len());
    for (row, r) in features.chunks_exact_mut(f).zip(&records) {
        row[..N_CONTINUOUS].copy_from_slice(&r.continuous);
        for (k, v) in r.categorical.iter().enumerate() {
            let j = vocab[k].binary_search(&v.as_str()).expect("value in vocabulary");
            row[offsets[k] + j] = 1.0;
        }
        labels.push(r.label);
    }
    let meta = DatasetMeta {
        name: "census".into(),
        feature_names,
        classes: 2,
        continuous: (0..N_CONTINUOUS).collect(),
        normalization: None,
        notes: vec![format!(
            "{} rows read, {} dropped for missing values, {} malformed",
            report.rows_read, report.dropped_missing, report.malformed
        )],
    };
    Ok((Dataset::new(features, labels, f, meta)?, report))
}

/// Loads a single Census CSV file.
pub fn load_census_csv(path: &Path) -> Result<Dataset> {
    load_census_files(&[path.to_path_buf()]).map(|(ds, _)| ds)
}

/// Loads every Census file present in `dir` (plain or `.gz`) as one pool.
pub fn load_census_dir(dir: &Path) -> Result<(Dataset, CensusReport)> {
    let paths: Vec<PathBuf> = CENSUS_FILES
        .iter()
        .filter_map(|n| find_data_file(dir, n))
        .collect();
    if paths.is_empty() {
        return Err(Error::MissingData {
            path: dir.join(CENSUS_FILES[0]),
            hint: format!(
                "Census needs {} and/or {} (optionally .gz) in the data directory; set --data-dir or ADASMOOTH_DATA_DIR",
                CENSUS_FILES[0], CENSUS_FILES[1]
            ),
        });
    }
    load_census_files(&paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,race,sex,capital-gain,capital-loss,hours-per-week,native-country,income
39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, United-States, <=50K
50, Self-emp-not-inc, 83311, Bachelors, 13, Married-civ-spouse, Exec-managerial, Husband, White, Male, 0, 0, 13, United-States, >50K.
38, ?, 215646, HS-grad, 9, Divorced, Handlers-cleaners, Not-in-family, White, Male, 0, 0, 40, United-States, <=50K
53, Private, 234721, 11th, 7, Married-civ-spouse

28, Private, 338409, Bachelors, 13, Married-civ-spouse, Prof-specialty, Wife, Black, Female, 0, 0, 40, Cuba, <=50K
";

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_drops_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "adult.data", SAMPLE);
        let (ds, rep) = load_census_files(&[p]).unwrap();
        assert_eq!(
            rep,
            CensusReport { rows_read: 5, dropped_missing: 1, malformed: 1, kept: 3 }
        );
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(&ds.row(0)[..6], &[39.0, 77516.0, 13.0, 2174.0, 0.0, 40.0]);
        // each categorical attribute contributes exactly one hot entry
        for i in 0..ds.len() {
            assert_eq!(ds.row(i)[6..].iter().sum::<f64>(), 8.0);
        }
        let names = &ds.meta().feature_names;
        let cuba = names.iter().position(|n| n == "native-country=Cuba").unwrap();
        assert_eq!(ds.row(2)[cuba], 1.0);
        assert_eq!(ds.row(0)[cuba], 0.0);
    }

    #[test]
    fn vocabulary_spans_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let lines: Vec<&str> = SAMPLE.lines().collect();
        let a = write(dir.path(), "a.csv", lines[1]);
        let b = write(dir.path(), "b.csv", &format!("|1x3 Cross validator\n{}\n", lines[6]));
        let (ds, rep) = load_census_files(&[a, b]).unwrap();
        assert_eq!(rep.rows_read, 2);
        assert_eq!(ds.len(), 2);
        assert!(ds.meta().feature_names.iter().any(|n| n == "race=Black"));
        assert!(ds.meta().feature_names.iter().any(|n| n == "race=White"));
    }

    #[test]
    fn empty_result_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x.csv", "1,2,3\n");
        assert!(load_census_csv(&p).is_err());
    }

    #[test]
    fn missing_dir_names_files() {
        let dir = tempfile::tempdir().unwrap();
        let msg = load_census_dir(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("adult.data") && msg.contains("adult.test"), "{msg}");
    }
}
