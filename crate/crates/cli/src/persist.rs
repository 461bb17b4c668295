//! Saving and loading trained classifiers together with their preprocessing
//! state, so prediction replays exactly what training saw.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use nrbfn::data::Preprocessor;
use nrbfn::lrc::{lrc_predict, LrcModel};
use nrbfn::nrbfn::{nrbfn_predict, NrbfnModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "kebab-case")]
pub enum SavedModel {
    Nrbfn(NrbfnModel),
    Lrc(LrcModel),
}

/// Everything needed to score new data: transform, label vocabulary, weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub library_version: String,
    pub preprocessor: Preprocessor,
    /// Original label tokens, indexed by class - 1.
    pub label_names: Vec<String>,
    pub model: SavedModel,
}

impl ModelFile {
    pub fn new(preprocessor: Preprocessor, label_names: Vec<String>, model: SavedModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            preprocessor,
            label_names,
            model,
        }
    }

    /// Scores preprocessed columns of `b`, returning labels in `1..=K`.
    pub fn predict(&self, b: &Array2<f64>) -> Result<Vec<usize>> {
        Ok(match &self.model {
            SavedModel::Nrbfn(m) => nrbfn_predict(m, b)?.labels,
            SavedModel::Lrc(m) => lrc_predict(m, b)?.labels,
        })
    }

    pub fn label_name(&self, class: usize) -> &str {
        self.label_names
            .get(class.wrapping_sub(1))
            .map(String::as_str)
            .unwrap_or("?")
    }
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string(file).context("serializing model")?;
    std::fs::write(path, text.as_bytes())
        .with_context(|| format!("writing model to {}", path.display()))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model from {}", path.display()))?;
    let file: ModelFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.format_version > MODEL_FORMAT_VERSION {
        bail!(
            "model format {} is newer than this build supports ({})",
            file.format_version,
            MODEL_FORMAT_VERSION
        );
    }
    Ok(file)
}
