//! One-dimensional parameter sweeps over a benchmark configuration.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{ClassifierSpec, ExperimentConfig, LambdaSpec};
use crate::runner::run_benchmark;

/// Which knob the sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Regularization weight.
    Lambda,
    /// Basis confidence threshold (RBF network only).
    T,
    /// Neighborhood size (RBF network or KNN baseline).
    K,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub test_error_percent: f64,
    pub train_error_percent: f64,
    pub basis_fraction_percent: Option<f64>,
    /// Spectral-risk columns; absent for the KNN baseline.
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda_gamma: Option<f64>,
    pub tradeoff: Option<f64>,
}

/// Re-runs the benchmark once per value, overriding one axis each time.
pub fn parameter_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        bail!("empty sweep");
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = base.clone();
        apply_axis(&mut cfg.classifier, axis, value)?;
        let report =
            run_benchmark(&cfg).with_context(|| format!("sweep point {axis:?}={value}"))?;
        let risk = report.risk;
        rows.push(SweepRow {
            value,
            test_error_percent: report.test_error_percent,
            train_error_percent: report.train_error_percent,
            basis_fraction_percent: report.basis_fraction_percent,
            epsilon: risk.map(|r| r.epsilon),
            gamma: risk.map(|r| r.gamma),
            lambda_gamma: risk.map(|r| r.lambda * r.gamma),
            tradeoff: risk.map(|r| r.tradeoff_value),
        });
    }
    Ok(rows)
}

fn apply_axis(spec: &mut ClassifierSpec, axis: SweepAxis, value: f64) -> Result<()> {
    match (axis, spec) {
        (SweepAxis::Lambda, ClassifierSpec::Nrbfn { lambda, .. })
        | (SweepAxis::Lambda, ClassifierSpec::Lrc { lambda }) => {
            if value < 0.0 || value.is_nan() {
                bail!("lambda must be nonnegative, got {value}");
            }
            *lambda = LambdaSpec::Fixed(value);
        }
        (SweepAxis::T, ClassifierSpec::Nrbfn { t, .. }) => {
            if !(0.0..=1.0).contains(&value) {
                bail!("t must lie in [0, 1], got {value}");
            }
            *t = value;
        }
        (SweepAxis::K, ClassifierSpec::Nrbfn { k, .. })
        | (SweepAxis::K, ClassifierSpec::KnnBaseline { k }) => {
            if value < 1.0 || value.fract() != 0.0 {
                bail!("k must be a positive integer, got {value}");
            }
            *k = value as usize;
        }
        (axis, spec) => bail!("axis {axis:?} does not apply to {}", spec.kind_name()),
    }
    Ok(())
}

/// Renders rows as CSV with a header, for plotting.
pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let axis_name = match axis {
        SweepAxis::Lambda => "lambda",
        SweepAxis::T => "t",
        SweepAxis::K => "k",
    };
    let mut out = format!(
        "{axis_name},test_error_percent,train_error_percent,basis_fraction_percent,epsilon,gamma,lambda_gamma,tradeoff\n"
    );
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for row in rows {
        let _ = writeln!(
            out,
            "{:e},{},{},{},{},{},{},{}",
            row.value,
            row.test_error_percent,
            row.train_error_percent,
            cell(row.basis_fraction_percent),
            cell(row.epsilon),
            cell(row.gamma),
            cell(row.lambda_gamma),
            cell(row.tradeoff),
        );
    }
    out
}

pub fn emit_sweep(axis: SweepAxis, rows: &[SweepRow], out: Option<&Path>) -> Result<()> {
    let text = sweep_csv(axis, rows);
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .with_context(|| format!("writing sweep to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_rejects_mismatched_classifier() {
        let mut spec = ClassifierSpec::Lrc {
            lambda: LambdaSpec::Fixed(1e-6),
        };
        assert!(apply_axis(&mut spec, SweepAxis::T, 0.5).is_err());
        assert!(apply_axis(&mut spec, SweepAxis::Lambda, 1e-3).is_ok());
        assert_eq!(
            spec,
            ClassifierSpec::Lrc {
                lambda: LambdaSpec::Fixed(1e-3)
            }
        );
    }

    #[test]
    fn axis_validates_values() {
        let mut spec = ClassifierSpec::default();
        assert!(apply_axis(&mut spec, SweepAxis::T, 1.5).is_err());
        assert!(apply_axis(&mut spec, SweepAxis::K, 2.5).is_err());
        assert!(apply_axis(&mut spec, SweepAxis::Lambda, -1.0).is_err());
        assert!(apply_axis(&mut spec, SweepAxis::K, 7.0).is_ok());
        match spec {
            ClassifierSpec::Nrbfn { k, .. } => assert_eq!(k, 7),
            _ => unreachable!(),
        }
    }

    #[test]
    fn csv_has_one_line_per_row_plus_header() {
        let rows = vec![SweepRow {
            value: 1e-5,
            test_error_percent: 4.0,
            train_error_percent: 1.0,
            basis_fraction_percent: Some(40.0),
            epsilon: Some(1.25),
            gamma: Some(3.0),
            lambda_gamma: Some(3e-5),
            tradeoff: Some(1.25003),
        }];
        let text = sweep_csv(SweepAxis::Lambda, &rows);
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("lambda,"));
        assert!(text.contains("1e-5,4,1,"));
    }
}
