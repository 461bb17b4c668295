//! Dataset loading, splitting, preprocessing, and label encoding.
//!
//! Datasets are dense, one sample per column, with labels remapped to
//! `1..=K` in order of first appearance in the source. Loaders accept the
//! whitespace-separated sparse `<label> <index>:<value>` format (1-based
//! indices) and numeric CSV with a designated label column.

use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ensure_matrix;

/// Largest feature-matrix footprint the dense loaders accept.
const MAX_DENSE_ENTRIES: usize = 100_000_000;

/// A labeled dataset with samples as columns.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    /// `p x n` feature matrix.
    pub features: Array2<f64>,
    /// Labels in `1..=class_count`, one per column.
    pub labels: Vec<usize>,
    pub class_count: usize,
    /// Original label tokens, indexed by class - 1.
    pub label_names: Vec<String>,
    pub source: Option<PathBuf>,
    /// Human-readable notes accumulated by splits and preprocessing.
    pub provenance: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset from parts, validating labels and finiteness.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        ensure_matrix("feature matrix", features.view())?;
        if labels.len() != features.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples but {} labels",
                features.ncols(),
                labels.len()
            )));
        }
        let mut seen = vec![false; class_count];
        for &l in &labels {
            if l == 0 || l > class_count {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    classes: class_count,
                });
            }
            seen[l - 1] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::EmptyClass(k + 1));
        }
        let label_names = (1..=class_count).map(|k| k.to_string()).collect();
        Ok(Self {
            features,
            labels,
            class_count,
            label_names,
            source: None,
            provenance: Vec::new(),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.features.nrows()
    }

    /// Samples per class, indexed by class - 1.
    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.class_count)
    }

    fn take(&self, indices: &[usize], note: String) -> Self {
        let features = self.features.select(Axis(1), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut provenance = self.provenance.clone();
        provenance.push(note);
        Self {
            features,
            labels,
            class_count: self.class_count,
            label_names: self.label_names.clone(),
            source: self.source.clone(),
            provenance,
        }
    }
}

/// Samples per class, indexed by class - 1.
pub fn class_counts(labels: &[usize], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0usize; class_count];
    for &l in labels {
        if l >= 1 && l <= class_count {
            counts[l - 1] += 1;
        }
    }
    counts
}

/// On-disk dataset formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// Numeric CSV; `label_column` is zero-based.
    Csv { label_column: usize },
    /// Sparse `<label> <index>:<value>` lines with 1-based indices.
    Libsvm,
}

impl Default for DataFormat {
    fn default() -> Self {
        DataFormat::Csv { label_column: 0 }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataFormat::Csv { label_column } => write!(f, "csv(label column {label_column})"),
            DataFormat::Libsvm => write!(f, "libsvm"),
        }
    }
}

/// Loads a dataset from `path` in the given format.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut ds = match format {
        DataFormat::Csv { label_column } => parse_csv(reader, path, label_column)?,
        DataFormat::Libsvm => parse_libsvm(reader, path)?,
    };
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

struct LabelInterner {
    names: Vec<String>,
}

impl LabelInterner {
    fn new() -> Self {
        Self { names: Vec::new() }
    }

    /// Maps a raw label token to a class in 1..=K by first occurrence.
    /// Numeric tokens are canonicalized so "+1", "1" and "1.0" coincide.
    fn intern(&mut self, token: &str) -> usize {
        let canon = match token.parse::<f64>() {
            Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
            _ => token.to_string(),
        };
        if let Some(pos) = self.names.iter().position(|n| *n == canon) {
            pos + 1
        } else {
            self.names.push(canon);
            self.names.len()
        }
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_lines<R: BufRead>(reader: R, path: &Path) -> Result<Vec<(usize, String)>> {
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }
    Ok(lines)
}

fn finish_dataset(
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    interner: LabelInterner,
    p: usize,
) -> Result<LabeledDataset> {
    let n = columns.len();
    if n == 0 || p == 0 {
        return Err(Error::EmptyDataset);
    }
    if p.saturating_mul(n) > MAX_DENSE_ENTRIES {
        return Err(Error::DatasetTooLarge { rows: p, cols: n });
    }
    let mut features = Array2::zeros((p, n));
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            features[[i, j]] = v;
        }
    }
    let class_count = interner.names.len();
    let mut ds = LabeledDataset::new(features, labels, class_count)?;
    ds.label_names = interner.names;
    Ok(ds)
}

fn parse_csv<R: BufRead>(reader: R, path: &Path, label_column: usize) -> Result<LabeledDataset> {
    let lines = read_lines(reader, path)?;
    let mut interner = LabelInterner::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut expected_fields: Option<usize> = None;

    for (pos, (line_no, line)) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if label_column >= fields.len() {
            return Err(parse_err(
                path,
                *line_no,
                format!(
                    "label column {} out of range for {} fields",
                    label_column,
                    fields.len()
                ),
            ));
        }
        match expected_fields {
            None => expected_fields = Some(fields.len()),
            Some(expected) if expected != fields.len() => {
                return Err(Error::InconsistentDimension {
                    path: path.display().to_string(),
                    line: *line_no,
                    expected,
                    found: fields.len(),
                })
            }
            Some(_) => {}
        }
        let mut col = Vec::with_capacity(fields.len() - 1);
        let mut bad_field = None;
        for (fi, field) in fields.iter().enumerate() {
            if fi == label_column {
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => col.push(v),
                Ok(_) => {
                    return Err(parse_err(
                        path,
                        *line_no,
                        format!("non-finite value {field}"),
                    ))
                }
                Err(_) => {
                    bad_field = Some(field.to_string());
                    break;
                }
            }
        }
        if let Some(field) = bad_field {
            // A non-numeric first row is a header; anywhere else it is an error.
            if pos == 0 {
                continue;
            }
            return Err(parse_err(
                path,
                *line_no,
                format!("invalid number '{field}'"),
            ));
        }
        labels.push(interner.intern(fields[label_column]));
        columns.push(col);
    }

    let p = columns.first().map_or(0, Vec::len);
    finish_dataset(columns, labels, interner, p)
}

fn parse_libsvm<R: BufRead>(reader: R, path: &Path) -> Result<LabeledDataset> {
    let lines = read_lines(reader, path)?;
    let mut interner = LabelInterner::new();
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (line_no, line) in &lines {
        let mut parts = line.split_whitespace();
        let label_tok = parts
            .next()
            .ok_or_else(|| parse_err(path, *line_no, "missing label"))?;
        labels.push(interner.intern(label_tok));
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for pair in parts {
            // Trailing comments are conventional in some exports.
            if pair.starts_with('#') {
                break;
            }
            let (idx_s, val_s) = pair.split_once(':').ok_or_else(|| {
                parse_err(
                    path,
                    *line_no,
                    format!("expected index:value, got '{pair}'"),
                )
            })?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| parse_err(path, *line_no, format!("invalid index '{idx_s}'")))?;
            if idx == 0 {
                return Err(parse_err(path, *line_no, "feature indices are 1-based"));
            }
            let val: f64 = val_s
                .parse()
                .map_err(|_| parse_err(path, *line_no, format!("invalid value '{val_s}'")))?;
            if !val.is_finite() {
                return Err(parse_err(
                    path,
                    *line_no,
                    format!("non-finite value {val_s}"),
                ));
            }
            if entries.iter().any(|&(seen, _)| seen == idx) {
                return Err(parse_err(
                    path,
                    *line_no,
                    format!("duplicate feature index {idx}"),
                ));
            }
            entries.push((idx, val));
            max_index = max_index.max(idx);
        }
        sparse.push(entries);
    }

    if sparse.is_empty() || max_index == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = sparse.len();
    if max_index.saturating_mul(n) > MAX_DENSE_ENTRIES {
        return Err(Error::DatasetTooLarge {
            rows: max_index,
            cols: n,
        });
    }
    let mut features = Array2::zeros((max_index, n));
    for (j, entries) in sparse.iter().enumerate() {
        for &(idx, val) in entries {
            features[[idx - 1, j]] = val;
        }
    }
    let class_count = interner.names.len();
    let mut ds = LabeledDataset::new(features, labels, class_count)?;
    ds.label_names = interner.names;
    Ok(ds)
}

/// How to divide a dataset into training and testing portions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum SplitSpec {
    /// Per class, in file order, the first `ceil(fraction * n_k)` samples train.
    FirstHalfPerClass { train_fraction: f64 },
    /// Per class, a seeded shuffle precedes the same fractional cut.
    SeededRandomStratified { seed: u64, train_fraction: f64 },
    /// Explicit zero-based training indices; the rest test.
    ExplicitIndices { train: Vec<usize> },
}

/// Splits a dataset into train and test portions.
///
/// Fractional schemes keep at least one sample of every class on each side,
/// so every class needs two samples. File order within a class is preserved.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let n = ds.n_samples();
    let (train_idx, note): (Vec<usize>, String) = match spec {
        SplitSpec::FirstHalfPerClass { train_fraction } => (
            stratified_indices(ds, *train_fraction, None)?,
            format!("first-per-class split, fraction {train_fraction}"),
        ),
        SplitSpec::SeededRandomStratified {
            seed,
            train_fraction,
        } => (
            stratified_indices(ds, *train_fraction, Some(*seed))?,
            format!("seeded stratified split, fraction {train_fraction}, seed {seed}"),
        ),
        SplitSpec::ExplicitIndices { train } => {
            for &i in train {
                if i >= n {
                    return Err(Error::DimensionMismatch(format!(
                        "train index {i} out of range for {n} samples"
                    )));
                }
            }
            let mut sorted = train.clone();
            sorted.sort_unstable();
            sorted.dedup();
            (sorted, "explicit index split".to_string())
        }
    };

    let mut in_train = vec![false; n];
    for &i in &train_idx {
        in_train[i] = true;
    }
    let test_idx: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let train = ds.take(&train_idx, format!("train of: {note}"));
    let test = ds.take(&test_idx, format!("test of: {note}"));
    Ok((train, test))
}

fn stratified_indices(ds: &LabeledDataset, fraction: f64, seed: Option<u64>) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::DimensionMismatch(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut train = Vec::new();
    for class in 1..=ds.class_count {
        let mut members: Vec<usize> = (0..ds.n_samples())
            .filter(|&j| ds.labels[j] == class)
            .collect();
        if members.len() < 2 {
            return Err(Error::TooFewSamples {
                class,
                count: members.len(),
                required: 2,
            });
        }
        if let Some(rng) = rng.as_mut() {
            for j in (1..members.len()).rev() {
                let i = rng.random_range(0..=j);
                members.swap(i, j);
            }
        }
        let take = ((fraction * members.len() as f64).ceil() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..take]);
    }
    train.sort_unstable();
    Ok(train)
}

/// Column scaling and centering options.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessOptions {
    /// Scale every sample to unit Euclidean length (applied first).
    pub unit_length: bool,
    /// Subtract the training row mean.
    pub mean_remove: bool,
}

/// Preprocessing statistics fitted on training data and replayed on test
/// data, so the test set never influences the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub options: PreprocessOptions,
    /// Training row mean, present when `mean_remove` is set.
    pub mean: Option<Array1<f64>>,
}

impl Preprocessor {
    /// Fits the transform on `train` and returns it with the transformed data.
    pub fn fit(
        train: &LabeledDataset,
        options: PreprocessOptions,
    ) -> Result<(Self, LabeledDataset)> {
        let mut features = train.features.clone();
        if options.unit_length {
            scale_unit_length(&mut features)?;
        }
        let mean = if options.mean_remove {
            let n = features.ncols() as f64;
            let mean = features.sum_axis(Axis(1)) / n;
            features -= &mean.view().insert_axis(Axis(1));
            Some(mean)
        } else {
            None
        };
        let mut out = train.clone();
        out.features = features;
        if options.unit_length {
            out.provenance.push("unit-length scaled".into());
        }
        if options.mean_remove {
            out.provenance.push("mean-removed (training mean)".into());
        }
        Ok((Self { options, mean }, out))
    }

    /// Applies the fitted transform to another dataset.
    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        let mut features = ds.features.clone();
        if self.options.unit_length {
            scale_unit_length(&mut features)?;
        }
        if let Some(mean) = &self.mean {
            if mean.len() != features.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "stored mean has {} entries but data has {} features",
                    mean.len(),
                    features.nrows()
                )));
            }
            features -= &mean.view().insert_axis(Axis(1));
        }
        let mut out = ds.clone();
        out.features = features;
        out.provenance
            .push("preprocessed with training statistics".into());
        Ok(out)
    }
}

fn scale_unit_length(features: &mut Array2<f64>) -> Result<()> {
    for (j, mut col) in features.axis_iter_mut(Axis(1)).enumerate() {
        let norm = col.dot(&col).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector(j));
        }
        col.mapv_inplace(|v| v / norm);
    }
    Ok(())
}

/// Class indicator matrix: `F[[c - 1, j]] = 1` when `labels[j] == c`.
pub fn to_indicator(labels: &[usize], class_count: usize) -> Result<Array2<f64>> {
    if labels.is_empty() || class_count == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut f = Array2::zeros((class_count, labels.len()));
    for (j, &l) in labels.iter().enumerate() {
        if l == 0 || l > class_count {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: class_count,
            });
        }
        f[[l - 1, j]] = 1.0;
    }
    Ok(f)
}

/// Deterministic isotropic Gaussian blobs: class `k` is centered at
/// `separation` along coordinate axis `(k - 1) mod p`. Intended for examples
/// and tests that need data with controllable class overlap.
pub fn synthetic_blobs(
    n_features: usize,
    per_class: &[usize],
    separation: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_features == 0 || per_class.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(k) = per_class.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(k + 1));
    }
    let n: usize = per_class.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Array2::zeros((n_features, n));
    let mut labels = Vec::with_capacity(n);
    let mut j = 0;
    for (k, &count) in per_class.iter().enumerate() {
        // Distinct center per class even when classes outnumber features:
        // walk the axes, moving one shell further out on each full cycle.
        let axis = k % n_features;
        let shell = (k / n_features + 1) as f64;
        for _ in 0..count {
            for i in 0..n_features {
                let noise: f64 = StandardNormal.sample(&mut rng);
                features[[i, j]] = noise + if i == axis { shell * separation } else { 0.0 };
            }
            labels.push(k + 1);
            j += 1;
        }
    }
    LabeledDataset::new(features, labels, per_class.len())
}
