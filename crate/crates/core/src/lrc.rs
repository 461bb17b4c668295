//! Linear regression for classification (LRC).
//!
//! Training centers the data, stacks a constant row on top (the augmented
//! matrix `At = [1^T; A]`, realizing the bias), and solves one ridge system
//! against the class indicator matrix:
//!
//! ```text
//! D* = F At^T (At At^T + lambda' I)^-1,     lambda' = lambda ||At||_F^2
//! ```
//!
//! Prediction centers with the *training* mean, augments, and takes the
//! row-wise argmax of `D* Bt`.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::to_indicator;
use crate::error::{Error, Result};
use crate::numerics::{ensure_matrix, ridge_solve};
use crate::Prediction;

/// A trained LRC classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrcModel {
    /// Solution matrix `D*`, `K x (p + 1)`; column 0 acts on the constant row.
    pub weights: Array2<f64>,
    /// Training row mean, subtracted before augmentation.
    pub mean: Array1<f64>,
    pub lambda: f64,
    /// Effective regularization actually applied: `lambda * ||At||_F^2`.
    pub lambda_prime: f64,
    pub class_count: usize,
}

fn augment(centered: &Array2<f64>) -> Array2<f64> {
    let (p, n) = centered.dim();
    let mut at = Array2::ones((p + 1, n));
    at.slice_mut(ndarray::s![1.., ..]).assign(centered);
    at
}

fn validate_labels(labels: &[usize], n: usize) -> Result<usize> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} samples but {} labels",
            labels.len()
        )));
    }
    let class_count = *labels.iter().max().unwrap_or(&0);
    if class_count == 0 {
        return Err(Error::LabelOutOfRange {
            label: 0,
            classes: 0,
        });
    }
    let counts = crate::data::class_counts(labels, class_count);
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(k + 1));
    }
    Ok(class_count)
}

/// Trains LRC on `a` (`p x n`, one sample per column) with labels in `1..=K`.
pub fn lrc_train(a: &Array2<f64>, labels: &[usize], lambda: f64) -> Result<LrcModel> {
    ensure_matrix("training data", a.view())?;
    if lambda < 0.0 || lambda.is_nan() {
        return Err(Error::NegativeRegularization(lambda));
    }
    let class_count = validate_labels(labels, a.ncols())?;

    let n = a.ncols() as f64;
    let mean = a.sum_axis(Axis(1)) / n;
    let centered = a - &mean.view().insert_axis(Axis(1));
    let at = augment(&centered);
    let f = to_indicator(labels, class_count)?;
    let lambda_prime = lambda * at.iter().map(|v| v * v).sum::<f64>();
    let weights = ridge_solve(&at, &f, lambda_prime)?;
    Ok(LrcModel {
        weights,
        mean,
        lambda,
        lambda_prime,
        class_count,
    })
}

/// Scores and classifies the columns of `b` with a trained model.
pub fn lrc_predict(model: &LrcModel, b: &Array2<f64>) -> Result<Prediction> {
    ensure_matrix("prediction data", b.view())?;
    if b.nrows() != model.mean.len() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, data has {}",
            model.mean.len(),
            b.nrows()
        )));
    }
    let centered = b - &model.mean.view().insert_axis(Axis(1));
    let bt = augment(&centered);
    let scores = model.weights.dot(&bt);
    let labels = crate::argmax_labels(&scores);
    Ok(Prediction { labels, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn separable_blobs() -> crate::data::LabeledDataset {
        crate::data::synthetic_blobs(3, &[15, 12], 8.0, 5).unwrap()
    }

    #[test]
    fn separable_data_trains_to_zero_error() {
        let ds = separable_blobs();
        let model = lrc_train(&ds.features, &ds.labels, 0.0).unwrap();
        assert_eq!(model.weights.dim(), (2, 4));
        let pred = lrc_predict(&model, &ds.features).unwrap();
        assert_eq!(pred.labels, ds.labels);
    }

    #[test]
    fn scores_sum_to_one_without_regularization() {
        // With lambda = 0 and a full-row-rank augmented matrix, 1^T D* is the
        // first unit vector, so every score column sums to the constant row.
        let ds = separable_blobs();
        let model = lrc_train(&ds.features, &ds.labels, 0.0).unwrap();
        let pred = lrcpredict_cols(&model, &ds.features);
        for j in 0..pred.ncols() {
            assert_abs_diff_eq!(pred.column(j).sum(), 1.0, epsilon = 1e-10);
        }
    }

    fn lrcpredict_cols(model: &LrcModel, b: &Array2<f64>) -> Array2<f64> {
        lrc_predict(model, b).unwrap().scores
    }

    #[test]
    fn regularization_shrinks_the_solution() {
        let ds = separable_blobs();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1e-6, 1e-3, 1e-1] {
            let model = lrc_train(&ds.features, &ds.labels, lambda).unwrap();
            let norm: f64 = model.weights.iter().map(|v| v * v).sum();
            assert!(norm <= last + 1e-12);
            last = norm;
        }
    }

    #[test]
    fn singular_training_set_is_reported() {
        // More features than samples leaves the augmented Gram rank deficient.
        let a = array![[1.0, 2.0], [0.5, 1.5], [2.0, 0.0],];
        let labels = vec![1, 2];
        assert!(matches!(
            lrc_train(&a, &labels, 0.0),
            Err(Error::SingularSystem { .. })
        ));
        assert!(lrc_train(&a, &labels, 1e-8).is_ok());
    }

    #[test]
    fn prediction_validates_feature_count() {
        let ds = separable_blobs();
        let model = lrc_train(&ds.features, &ds.labels, 0.0).unwrap();
        let wrong = Array2::zeros((5, 2));
        assert!(matches!(
            lrc_predict(&model, &wrong),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn labels_must_cover_every_class() {
        let a = Array2::eye(3);
        assert!(matches!(
            lrc_train(&a, &[1, 3, 3], 0.0),
            Err(Error::EmptyClass(2))
        ));
        assert!(matches!(
            lrc_train(&a, &[1, 1], 0.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn ties_resolve_to_the_smaller_class() {
        // A model with identical rows scores every class equally.
        let model = LrcModel {
            weights: array![[0.5, 0.0], [0.5, 0.0]],
            mean: Array1::zeros(1),
            lambda: 0.0,
            lambda_prime: 0.0,
            class_count: 2,
        };
        let pred = lrc_predict(&model, &array![[3.0, -1.0]]).unwrap();
        assert_eq!(pred.labels, vec![1, 1]);
    }
}
