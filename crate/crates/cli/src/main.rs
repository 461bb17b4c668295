use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nrbfn::data::{load_dataset, DataFormat, LabeledDataset, PreprocessOptions, Preprocessor};
use nrbfn::diagnostics::{nrbfn_risk_report, risk_report};
use nrbfn::lrc::lrc_train;
use nrbfn::nrbfn::{nrbfn_train, NrbfnParams};

use nrbfn_cli::config::{nrbfn_lambda, ExperimentConfig, LambdaSpec};
use nrbfn_cli::persist::{load_model, save_model, ModelFile, SavedModel};
use nrbfn_cli::runner::{cross_validate, emit_report, run_benchmark};
use nrbfn_cli::sweep::{emit_sweep, parameter_sweep, SweepAxis};
use nrbfn_cli::ClassifierSpec;

/// Classifiers built on normalized RBF networks and regularized linear
/// regression, with fitting-error/spectral-risk diagnostics.
///
/// Linear algebra threads follow OPENBLAS_NUM_THREADS; set it to 1 for
/// fully deterministic timings.
#[derive(Parser)]
#[command(name = "nrbfn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file.
    #[arg(long)]
    data: PathBuf,
    /// Dataset format.
    #[arg(long, value_parser = ["csv", "libsvm"], default_value = "csv")]
    format: String,
    /// Zero-based label column (CSV only).
    #[arg(long, default_value_t = 0)]
    label_column: usize,
}

impl DataArgs {
    fn format(&self) -> DataFormat {
        match self.format.as_str() {
            "libsvm" => DataFormat::Libsvm,
            _ => DataFormat::Csv {
                label_column: self.label_column,
            },
        }
    }

    fn load(&self) -> Result<LabeledDataset> {
        load_dataset(&self.data, self.format())
            .with_context(|| format!("loading {}", self.data.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier on a whole dataset and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Where to write the model file.
        #[arg(long)]
        model_out: PathBuf,
        /// Which classifier to train.
        #[arg(long, value_parser = ["nrbfn", "lrc"], default_value = "nrbfn")]
        classifier: String,
        /// Fixed regularization weight. Mutually exclusive with --cv.
        #[arg(long, conflicts_with = "cv")]
        lambda: Option<f64>,
        /// Select the regularization weight by cross-validation (default).
        #[arg(long)]
        cv: bool,
        /// Basis confidence threshold (nrbfn).
        #[arg(long, default_value_t = 0.9)]
        t: f64,
        /// Neighborhood size (nrbfn).
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Cross-validation folds.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Seed for fold shuffling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scale each sample to unit Euclidean length.
        #[arg(long)]
        unit_length: bool,
        /// Remove the training mean from every sample.
        #[arg(long)]
        mean_remove: bool,
    },
    /// Score a dataset with a saved model.
    Predict {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Output file for predicted labels, one per line (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full benchmark protocol from a JSON config.
    Bench {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report output path (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a benchmark config across one parameter axis; emits CSV.
    Sweep {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Which parameter to vary.
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated values for the axis.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// CSV output path (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute risk diagnostics of a saved model on a dataset.
    Diagnose {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            model_out,
            classifier,
            lambda,
            cv,
            t,
            k,
            folds,
            seed,
            unit_length,
            mean_remove,
        } => {
            let ds = data.load()?;
            let options = PreprocessOptions {
                unit_length,
                mean_remove,
            };
            let (pre, train) = Preprocessor::fit(&ds, options)?;
            let spec = match classifier.as_str() {
                "lrc" => ClassifierSpec::Lrc {
                    lambda: LambdaSpec::Fixed(0.0), // grid handled below
                },
                _ => ClassifierSpec::Nrbfn {
                    k,
                    t,
                    lambda: LambdaSpec::Fixed(0.0),
                },
            };
            let chosen = match (lambda, cv) {
                (Some(v), _) => v,
                (None, _) => {
                    // CV is the default when no fixed value is given.
                    let grid = match &spec {
                        ClassifierSpec::Lrc { .. } => nrbfn_cli::config::lrc_lambda(),
                        _ => nrbfn_lambda(),
                    };
                    let grid = grid.grid().expect("default lambda specs are grids");
                    let outcome = cross_validate(&spec, &train, grid, folds, seed)?;
                    eprintln!(
                        "cross-validation chose lambda = {:e} over {} folds",
                        outcome.chosen_lambda, outcome.effective_folds
                    );
                    outcome.chosen_lambda
                }
            };
            let model = match &spec {
                ClassifierSpec::Lrc { .. } => {
                    SavedModel::Lrc(lrc_train(&train.features, &train.labels, chosen)?)
                }
                _ => SavedModel::Nrbfn(nrbfn_train(
                    &train.features,
                    &train.labels,
                    NrbfnParams {
                        lambda: chosen,
                        k,
                        t,
                    },
                )?),
            };
            let file = ModelFile::new(pre, train.label_names.clone(), model);
            let training_predictions = file.predict(&train.features)?;
            let wrong = training_predictions
                .iter()
                .zip(&train.labels)
                .filter(|(p, t)| p != t)
                .count();
            save_model(&file, &model_out)?;
            eprintln!(
                "trained {} on {} samples (training error {:.2}%), model written to {}",
                classifier,
                train.n_samples(),
                100.0 * wrong as f64 / train.n_samples() as f64,
                model_out.display()
            );
            Ok(())
        }
        Command::Predict { model, data, out } => {
            let file = load_model(&model)?;
            let ds = data.load()?;
            let prepared = file.preprocessor.apply(&ds)?;
            let predicted = file.predict(&prepared.features)?;
            let mut text = String::new();
            for &class in &predicted {
                text.push_str(file.label_name(class));
                text.push('\n');
            }
            match out {
                Some(path) => std::fs::write(&path, text.as_bytes())
                    .with_context(|| format!("writing predictions to {}", path.display()))?,
                None => print!("{text}"),
            }
            // The file carries its own labels; score against them by token.
            let wrong = predicted
                .iter()
                .zip(&ds.labels)
                .filter(|(&p, &actual)| file.label_name(p) != ds.label_names[actual - 1])
                .count();
            eprintln!(
                "error rate {:.2}% over {} samples",
                100.0 * wrong as f64 / ds.n_samples() as f64,
                ds.n_samples()
            );
            Ok(())
        }
        Command::Bench { config, seed, out } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = run_benchmark(&cfg)?;
            emit_report(&report, out.as_deref())
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let rows = parameter_sweep(&cfg, axis, &values)?;
            emit_sweep(axis, &rows, out.as_deref())
        }
        Command::Diagnose { model, data } => {
            let file = load_model(&model)?;
            let ds = data.load()?;
            let prepared = file.preprocessor.apply(&ds)?;
            let f = nrbfn::data::to_indicator(&prepared.labels, prepared.class_count)?;
            match &file.model {
                SavedModel::Nrbfn(m) => {
                    if prepared.class_count != m.class_count {
                        bail!(
                            "model has {} classes but data has {}",
                            m.class_count,
                            prepared.class_count
                        );
                    }
                    let wt = m.design_matrix(&prepared.features)?;
                    let report = nrbfn_risk_report(m, &f, &wt)?;
                    println!("{}", serde_json::to_string_pretty(&report)?);
                }
                SavedModel::Lrc(m) => {
                    if prepared.class_count != m.class_count {
                        bail!(
                            "model has {} classes but data has {}",
                            m.class_count,
                            prepared.class_count
                        );
                    }
                    let centered =
                        &prepared.features - &m.mean.view().insert_axis(ndarray::Axis(1));
                    let mut at = ndarray::Array2::ones((centered.nrows() + 1, centered.ncols()));
                    at.slice_mut(ndarray::s![1.., ..]).assign(&centered);
                    let report = risk_report(&f, &at, m.lambda)?;
                    println!("{}", serde_json::to_string_pretty(&report)?);
                }
            }
            Ok(())
        }
    }
}
