//! Experiment configuration: dataset location, split scheme, classifier and
//! its hyper-parameters, and cross-validation settings. Serializable so a
//! benchmark is fully described by one JSON file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use nrbfn::data::{DataFormat, PreprocessOptions, SplitSpec};

/// A complete benchmark description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset file; relative paths resolve against the config's directory.
    pub dataset: PathBuf,
    #[serde(default)]
    pub format: DataFormat,
    /// Display name; defaults to the dataset file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_split")]
    pub split: SplitSpec,
    #[serde(default)]
    pub preprocess: PreprocessOptions,
    #[serde(default)]
    pub classifier: ClassifierSpec,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    /// Seed for fold assignment (and echoed into the report).
    #[serde(default)]
    pub seed: u64,
}

fn default_split() -> SplitSpec {
    SplitSpec::FirstHalfPerClass {
        train_fraction: 0.5,
    }
}

fn default_folds() -> usize {
    5
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            format: DataFormat::default(),
            name: None,
            split: default_split(),
            preprocess: PreprocessOptions::default(),
            classifier: ClassifierSpec::default(),
            cv_folds: default_folds(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file, resolving the dataset path against its parent.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.dataset.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset = dir.join(&cfg.dataset);
            }
        }
        Ok(cfg)
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }
}

/// Which classifier to run and with what hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Nrbfn {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_t")]
        t: f64,
        #[serde(default = "nrbfn_lambda")]
        lambda: LambdaSpec,
    },
    Lrc {
        #[serde(default = "lrc_lambda")]
        lambda: LambdaSpec,
    },
    /// Majority vote over the k nearest training samples.
    KnnBaseline {
        #[serde(default = "default_k")]
        k: usize,
    },
}

impl ClassifierSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassifierSpec::Nrbfn { .. } => "nrbfn",
            ClassifierSpec::Lrc { .. } => "lrc",
            ClassifierSpec::KnnBaseline { .. } => "knn-baseline",
        }
    }
}

pub(crate) fn default_k() -> usize {
    20
}

pub(crate) fn default_t() -> f64 {
    0.9
}

/// Default cross-validation grid of the RBF network.
pub fn nrbfn_lambda() -> LambdaSpec {
    LambdaSpec::CvGrid(vec![1e-5, 1e-9, 1e-13])
}

/// Default cross-validation grid of LRC: 10^-13 through 10^-2.
pub fn lrc_lambda() -> LambdaSpec {
    LambdaSpec::CvGrid((2..=13).rev().map(|e| 10f64.powi(-e)).collect())
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::Nrbfn {
            k: default_k(),
            t: default_t(),
            lambda: nrbfn_lambda(),
        }
    }
}

/// Either a fixed regularization weight or a grid to cross-validate over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Fixed(f64),
    CvGrid(Vec<f64>),
}

impl LambdaSpec {
    pub fn grid(&self) -> Option<&[f64]> {
        match self {
            LambdaSpec::Fixed(_) => None,
            LambdaSpec::CvGrid(g) => Some(g),
        }
    }
}
