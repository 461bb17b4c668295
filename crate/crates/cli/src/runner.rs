//! Benchmark orchestration: load, split, preprocess, cross-validate, train,
//! predict, and report.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use nrbfn::data::{load_dataset, split, LabeledDataset, Preprocessor, SplitSpec};
use nrbfn::diagnostics::{risk_report, RiskReport};
use nrbfn::lrc::{lrc_predict, lrc_train, LrcModel};
use nrbfn::nrbfn::{nrbfn_predict, nrbfn_train, NrbfnModel, NrbfnParams};

use crate::baseline::knn_predict;
use crate::config::{ClassifierSpec, ExperimentConfig, LambdaSpec};
use crate::folds::stratified_folds;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Outcome of one full benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub library_version: String,
    pub dataset: String,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub class_count: usize,
    /// Exact configuration, for reproduction.
    pub config: ExperimentConfig,
    pub seed: u64,
    /// Cross-validation table; absent when lambda was fixed or irrelevant.
    pub cross_validation: Option<CvOutcome>,
    /// The regularization weight actually trained with, when applicable.
    pub chosen_lambda: Option<f64>,
    pub train_error_percent: f64,
    pub test_error_percent: f64,
    /// Share of training samples kept as RBF basis.
    pub basis_fraction_percent: Option<f64>,
    pub basis_size: Option<usize>,
    /// Fitting-error/spectral-risk diagnostics of the training solve.
    pub risk: Option<RiskReport>,
    pub timings_ms: Timings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub cross_validation: f64,
    pub train: f64,
    pub predict: f64,
    pub total: f64,
}

/// Mean validation error per grid value, plus the selection itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub chosen_lambda: f64,
    pub effective_folds: usize,
    pub table: Vec<LambdaScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub mean_error_percent: f64,
    pub fold_errors_percent: Vec<f64>,
}

fn error_percent(predicted: &[usize], truth: &[usize]) -> f64 {
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    100.0 * wrong as f64 / truth.len().max(1) as f64
}

/// Trains the configured classifier at a given lambda and scores a dataset.
fn evaluate_once(
    spec: &ClassifierSpec,
    lambda: f64,
    train: &LabeledDataset,
    eval: &LabeledDataset,
) -> Result<f64> {
    let predicted = match spec {
        ClassifierSpec::Nrbfn { k, t, .. } => {
            let params = NrbfnParams {
                lambda,
                k: (*k).min(train.n_samples().saturating_sub(1)).max(1),
                t: *t,
            };
            let model = nrbfn_train(&train.features, &train.labels, params)?;
            nrbfn_predict(&model, &eval.features)?.labels
        }
        ClassifierSpec::Lrc { .. } => {
            let model = lrc_train(&train.features, &train.labels, lambda)?;
            lrc_predict(&model, &eval.features)?.labels
        }
        ClassifierSpec::KnnBaseline { .. } => {
            bail!("the KNN baseline has no regularization to validate")
        }
    };
    Ok(error_percent(&predicted, &eval.labels))
}

/// Selects a regularization weight by stratified cross-validation.
///
/// Mean fold errors are compared exactly; ties go to the smaller lambda.
pub fn cross_validate(
    spec: &ClassifierSpec,
    train: &LabeledDataset,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvOutcome> {
    if grid.is_empty() {
        bail!("empty cross-validation grid");
    }
    let assignment = stratified_folds(&train.labels, train.class_count, folds, seed)?;
    let mut table = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut fold_errors = Vec::with_capacity(assignment.len());
        for fold in &assignment {
            let keep: Vec<usize> = (0..train.n_samples())
                .filter(|j| !fold.contains(j))
                .collect();
            let (fit, validate) = split(train, &SplitSpec::ExplicitIndices { train: keep })?;
            fold_errors.push(evaluate_once(spec, lambda, &fit, &validate)?);
        }
        let mean = fold_errors.iter().sum::<f64>() / fold_errors.len() as f64;
        table.push(LambdaScore {
            lambda,
            mean_error_percent: mean,
            fold_errors_percent: fold_errors,
        });
    }
    let chosen = table
        .iter()
        .map(|s| (s.mean_error_percent, s.lambda))
        .min_by(|a, b| a.partial_cmp(b).expect("finite errors"))
        .expect("non-empty grid")
        .1;
    Ok(CvOutcome {
        chosen_lambda: chosen,
        effective_folds: assignment.len(),
        table,
    })
}

/// Rebuilds the augmented design matrix of a trained LRC model on its
/// training data, exactly as training saw it.
fn lrc_design(model: &LrcModel, features: &Array2<f64>) -> Array2<f64> {
    let centered = features - &model.mean.view().insert_axis(Axis(1));
    let mut at = Array2::ones((features.nrows() + 1, features.ncols()));
    at.slice_mut(ndarray::s![1.., ..]).assign(&centered);
    at
}

/// Runs the full benchmark protocol for one configuration.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    let started = Instant::now();
    let ds = load_dataset(&cfg.dataset, cfg.format)
        .with_context(|| format!("loading {}", cfg.dataset.display()))?;
    let (train_raw, test_raw) = split(&ds, &cfg.split).context("splitting dataset")?;
    let (preprocessor, train) =
        Preprocessor::fit(&train_raw, cfg.preprocess).context("preprocessing training set")?;
    let test = preprocessor
        .apply(&test_raw)
        .context("preprocessing test set")?;

    // Regularization selection.
    let cv_started = Instant::now();
    let (cross_validation, chosen_lambda) = match &cfg.classifier {
        ClassifierSpec::KnnBaseline { .. } => (None, None),
        ClassifierSpec::Nrbfn { lambda, .. } | ClassifierSpec::Lrc { lambda } => match lambda {
            LambdaSpec::Fixed(v) => (None, Some(*v)),
            LambdaSpec::CvGrid(grid) => {
                let outcome = cross_validate(&cfg.classifier, &train, grid, cfg.cv_folds, cfg.seed)
                    .context("cross-validation")?;
                let chosen = outcome.chosen_lambda;
                (Some(outcome), Some(chosen))
            }
        },
    };
    let cv_ms = cv_started.elapsed().as_secs_f64() * 1e3;

    // Final fit and scoring.
    let train_started = Instant::now();
    let trained = match &cfg.classifier {
        ClassifierSpec::Nrbfn { k, t, .. } => Trained::Nrbfn(nrbfn_train(
            &train.features,
            &train.labels,
            NrbfnParams {
                lambda: chosen_lambda.expect("nrbfn always has a lambda"),
                k: (*k).min(train.n_samples().saturating_sub(1)).max(1),
                t: *t,
            },
        )?),
        ClassifierSpec::Lrc { .. } => Trained::Lrc(lrc_train(
            &train.features,
            &train.labels,
            chosen_lambda.expect("lrc always has a lambda"),
        )?),
        ClassifierSpec::KnnBaseline { k } => Trained::Knn { k: *k },
    };
    let train_ms = train_started.elapsed().as_secs_f64() * 1e3;

    let predict_started = Instant::now();
    let (train_predictions, test_predictions) = match &trained {
        Trained::Nrbfn(model) => (
            nrbfn_predict(model, &train.features)?.labels,
            nrbfn_predict(model, &test.features)?.labels,
        ),
        Trained::Lrc(model) => (
            lrc_predict(model, &train.features)?.labels,
            lrc_predict(model, &test.features)?.labels,
        ),
        Trained::Knn { k } => {
            let k = (*k).min(train.n_samples());
            (
                knn_predict(
                    &train.features,
                    &train.labels,
                    train.class_count,
                    &train.features,
                    k,
                )?,
                knn_predict(
                    &train.features,
                    &train.labels,
                    train.class_count,
                    &test.features,
                    k,
                )?,
            )
        }
    };
    let predict_ms = predict_started.elapsed().as_secs_f64() * 1e3;

    let risk = match &trained {
        Trained::Nrbfn(model) => Some(model.diagnostics),
        Trained::Lrc(model) => {
            let f = nrbfn::data::to_indicator(&train.labels, train.class_count)?;
            let at = lrc_design(model, &train.features);
            Some(risk_report(&f, &at, model.lambda)?)
        }
        Trained::Knn { .. } => None,
    };
    let (basis_size, basis_fraction_percent) = match &trained {
        Trained::Nrbfn(model) => (
            Some(model.basis_indices.len()),
            Some(model.basis_fraction(train.n_samples()) * 100.0),
        ),
        _ => (None, None),
    };

    Ok(BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset: cfg.display_name(),
        n_features: ds.n_features(),
        n_train: train.n_samples(),
        n_test: test.n_samples(),
        class_count: ds.class_count,
        config: cfg.clone(),
        seed: cfg.seed,
        cross_validation,
        chosen_lambda,
        train_error_percent: error_percent(&train_predictions, &train.labels),
        test_error_percent: error_percent(&test_predictions, &test.labels),
        basis_fraction_percent,
        basis_size,
        risk,
        timings_ms: Timings {
            cross_validation: cv_ms,
            train: train_ms,
            predict: predict_ms,
            total: started.elapsed().as_secs_f64() * 1e3,
        },
    })
}

enum Trained {
    Nrbfn(NrbfnModel),
    Lrc(LrcModel),
    Knn { k: usize },
}

/// Writes a report as pretty JSON to a file or stdout.
pub fn emit_report(report: &BenchmarkReport, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Parses a report back; the round-trip partner of [`emit_report`].
pub fn parse_report(text: &str) -> Result<BenchmarkReport> {
    serde_json::from_str(text).map_err(|e| anyhow!("invalid report: {e}"))
}
