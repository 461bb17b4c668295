//! Normalized RBF network (nRBFN) with soft-KNN basis selection.
//!
//! The design matrix is a column-normalized Gaussian kernel between a basis
//! subset `G` of the training samples and all samples, so every column is a
//! probability vector. Training solves one ridge system against the class
//! indicator; the per-sample *confidence* used for basis selection is the
//! probability mass a sample's k nearest neighbours of its own class carry
//! in that kernel. Low-confidence samples sit near class boundaries and
//! become basis vectors.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{class_counts, to_indicator};
use crate::diagnostics::{risk_report, RiskReport};
use crate::error::{Error, Result};
use crate::graph::{normalized_gaussian_from_sq_dists, NormalizedSimilarity};
use crate::numerics::{ensure_matrix, knn_search, pairwise_sq_dists, ridge_solve};
use crate::Prediction;

/// Training hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrbfnParams {
    /// Ridge weight; the effective value is `lambda * ||W~||_F^2`.
    pub lambda: f64,
    /// Neighbourhood size for the confidence computation.
    pub k: usize,
    /// Confidence threshold: samples with confidence below `t` enter the basis.
    pub t: f64,
}

impl Default for NrbfnParams {
    fn default() -> Self {
        Self {
            lambda: 1e-13,
            k: 20,
            t: 0.9,
        }
    }
}

/// Outcome of soft-KNN basis selection.
#[derive(Debug, Clone)]
pub struct SknnResult {
    /// Selected sample indices, ascending.
    pub basis_indices: Vec<usize>,
    /// Per-sample confidence in `[0, 1]`.
    pub confidences: Vec<f64>,
    /// Mean k-NN distance, the kernel width used for the confidences.
    pub sigma: f64,
}

/// A trained normalized RBF network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrbfnModel {
    /// Basis vectors, `p x r`.
    pub basis: Array2<f64>,
    /// Class of each basis vector.
    pub basis_labels: Vec<usize>,
    /// Positions of the basis vectors in the training set.
    pub basis_indices: Vec<usize>,
    /// Kernel width: mean basis-to-sample distance at training time.
    pub sigma: f64,
    /// Solution matrix `X*`, `K x r`.
    pub weights: Array2<f64>,
    pub lambda: f64,
    /// Effective regularization actually applied: `lambda * ||W~||_F^2`.
    pub lambda_prime: f64,
    pub class_count: usize,
    /// Fitting-error / spectral-risk measures of the training solve.
    pub diagnostics: RiskReport,
}

impl NrbfnModel {
    /// Fraction of the training set retained as basis vectors.
    pub fn basis_fraction(&self, train_size: usize) -> f64 {
        self.basis_indices.len() as f64 / train_size as f64
    }

    /// Recomputes the normalized design matrix of this model against `a`.
    pub fn design_matrix(&self, a: &Array2<f64>) -> Result<NormalizedSimilarity> {
        let sq = pairwise_sq_dists(&self.basis, a)?;
        normalized_gaussian_from_sq_dists(&sq, self.sigma)
    }
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
    let counts = class_counts(labels, class_count);
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(k + 1));
    }
    Ok(class_count)
}

/// Per-sample same-class neighbour mass under the normalized k-NN kernel.
fn knn_confidences(a: &Array2<f64>, labels: &[usize], k: usize) -> Result<(Vec<f64>, f64)> {
    let n = a.ncols();
    let knn = knn_search(a, k)?;
    let total: f64 = knn.sq_dists.iter().map(|&d| d.sqrt()).sum();
    let sigma = total / (k as f64 * n as f64);
    if sigma <= 0.0 || sigma.is_nan() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let wt = normalized_gaussian_from_sq_dists(&knn.sq_dists, sigma)?;
    let mut confidences = vec![0.0f64; n];
    for j in 0..n {
        let mut t = 0.0;
        for rank in 0..k {
            if labels[knn.indices[[rank, j]]] == labels[j] {
                t += wt.w_tilde[[rank, j]];
            }
        }
        confidences[j] = t;
    }
    Ok((confidences, sigma))
}

/// Guarantees one basis vector per class: any class without a member gets
/// its lowest-confidence sample (ties to the lower index).
fn cover_missing_classes(
    basis: &mut Vec<usize>,
    confidences: &[f64],
    labels: &[usize],
    class_count: usize,
) {
    let mut covered = vec![false; class_count];
    for &j in basis.iter() {
        covered[labels[j] - 1] = true;
    }
    for class in 1..=class_count {
        if covered[class - 1] {
            continue;
        }
        let pick = (0..labels.len())
            .filter(|&j| labels[j] == class)
            .min_by(|&x, &y| confidences[x].total_cmp(&confidences[y]).then(x.cmp(&y)))
            .expect("validated: every class has samples");
        basis.push(pick);
    }
    basis.sort_unstable();
    basis.dedup();
}

/// Soft-KNN basis selection: samples whose same-class neighbour mass falls
/// below `t` are kept, and every class contributes at least one vector.
pub fn sknn_select_basis(
    a: &Array2<f64>,
    labels: &[usize],
    k: usize,
    t: f64,
) -> Result<SknnResult> {
    ensure_matrix("training data", a.view())?;
    let class_count = validate_labels(labels, a.ncols())?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidThreshold(t));
    }
    let (confidences, sigma) = knn_confidences(a, labels, k)?;
    let mut basis: Vec<usize> = (0..labels.len()).filter(|&j| confidences[j] < t).collect();
    cover_missing_classes(&mut basis, &confidences, labels, class_count);
    Ok(SknnResult {
        basis_indices: basis,
        confidences,
        sigma,
    })
}

/// Basis selection at a prescribed size: the `size` lowest-confidence samples
/// (ties to the lower index), then class coverage as in [`sknn_select_basis`].
/// Coverage can push the result slightly above `size` when a class would
/// otherwise be absent.
pub fn sknn_select_basis_fixed(
    a: &Array2<f64>,
    labels: &[usize],
    k: usize,
    size: usize,
) -> Result<SknnResult> {
    ensure_matrix("training data", a.view())?;
    let class_count = validate_labels(labels, a.ncols())?;
    let n = labels.len();
    if size == 0 || size > n {
        return Err(Error::DimensionMismatch(format!(
            "basis size {size} out of range 1..={n}"
        )));
    }
    let (confidences, sigma) = knn_confidences(a, labels, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&x, &y| confidences[x].total_cmp(&confidences[y]).then(x.cmp(&y)));
    let mut basis: Vec<usize> = order[..size].to_vec();
    basis.sort_unstable();
    cover_missing_classes(&mut basis, &confidences, labels, class_count);
    Ok(SknnResult {
        basis_indices: basis,
        confidences,
        sigma,
    })
}

/// Trains an nRBFN: selects the basis, builds the normalized kernel between
/// basis and training samples with `sigma` = mean of all basis-to-sample
/// distances, and solves the ridge system against the class indicator.
pub fn nrbfn_train(a: &Array2<f64>, labels: &[usize], params: NrbfnParams) -> Result<NrbfnModel> {
    let selection = sknn_select_basis(a, labels, params.k, params.t)?;
    nrbfn_train_with_basis(a, labels, &selection.basis_indices, params.lambda)
}

/// Trains with an explicitly chosen basis (size-controlled experiments).
pub fn nrbfn_train_with_basis(
    a: &Array2<f64>,
    labels: &[usize],
    basis_indices: &[usize],
    lambda: f64,
) -> Result<NrbfnModel> {
    ensure_matrix("training data", a.view())?;
    let class_count = validate_labels(labels, a.ncols())?;
    if lambda < 0.0 || lambda.is_nan() {
        return Err(Error::NegativeRegularization(lambda));
    }
    if basis_indices.is_empty() {
        return Err(Error::Empty("basis"));
    }
    if let Some(&bad) = basis_indices.iter().find(|&&j| j >= a.ncols()) {
        return Err(Error::DimensionMismatch(format!(
            "basis index {bad} out of range for {} samples",
            a.ncols()
        )));
    }

    let basis = a.select(Axis(1), basis_indices);
    let basis_labels: Vec<usize> = basis_indices.iter().map(|&j| labels[j]).collect();
    let (r, n) = (basis.ncols(), a.ncols());

    let sq = pairwise_sq_dists(&basis, a)?;
    let sigma = sq.iter().map(|&d| d.sqrt()).sum::<f64>() / (r as f64 * n as f64);
    if sigma <= 0.0 || sigma.is_nan() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let wt = normalized_gaussian_from_sq_dists(&sq, sigma)?;

    let f = to_indicator(labels, class_count)?;
    let lambda_prime = lambda * wt.w_tilde.iter().map(|v| v * v).sum::<f64>();
    let weights = match ridge_solve(&wt.w_tilde, &f, lambda_prime) {
        Ok(w) => w,
        // An unregularized solve on a deficient kernel means redundant basis
        // vectors; surface that as a rank problem rather than a solver detail.
        Err(Error::SingularSystem { rcond }) => return Err(Error::RankDeficient(rcond)),
        Err(e) => return Err(e),
    };
    let diagnostics = risk_report(&f, &wt.w_tilde, lambda)?;

    Ok(NrbfnModel {
        basis,
        basis_labels,
        basis_indices: basis_indices.to_vec(),
        sigma,
        weights,
        lambda,
        lambda_prime,
        class_count,
        diagnostics,
    })
}

/// Scores and classifies the columns of `b`.
///
/// A column whose squared distances to every basis vector overflow carries
/// no kernel information; it falls back to a one-hot score on the nearest
/// basis vector (lowest index among equals).
pub fn nrbfn_predict(model: &NrbfnModel, b: &Array2<f64>) -> Result<Prediction> {
    ensure_matrix("prediction data", b.view())?;
    if b.nrows() != model.basis.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, data has {}",
            model.basis.nrows(),
            b.nrows()
        )));
    }
    let mut sq = pairwise_sq_dists(&model.basis, b)?;
    let m = sq.ncols();
    let mut fallback: Vec<(usize, usize)> = Vec::new();
    for j in 0..m {
        let col = sq.column(j);
        let (best, min) = col
            .iter()
            .enumerate()
            .fold((0usize, f64::INFINITY), |acc, (i, &d)| {
                if d < acc.1 {
                    (i, d)
                } else {
                    acc
                }
            });
        if !min.is_finite() {
            fallback.push((j, best));
            sq.column_mut(j).fill(0.0);
        }
    }
    let wt = normalized_gaussian_from_sq_dists(&sq, model.sigma)?;
    let mut scores = model.weights.dot(&wt.w_tilde);
    for &(j, basis_idx) in &fallback {
        scores.column_mut(j).fill(0.0);
        scores[[model.basis_labels[basis_idx] - 1, j]] = 1.0;
    }
    let labels = crate::argmax_labels(&scores);
    Ok(Prediction { labels, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    /// 1-D two-class line: interior boundary points split their neighbour
    /// mass across classes, exterior points keep it all within class.
    fn six_point_line() -> (Array2<f64>, Vec<usize>) {
        (
            array![[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]],
            vec![1, 1, 1, 2, 2, 2],
        )
    }

    #[test]
    fn sknn_keeps_boundary_points() {
        let (a, labels) = six_point_line();
        let sel = sknn_select_basis(&a, &labels, 2, 0.9).unwrap();
        assert_eq!(sel.basis_indices, vec![2, 3]);
        let expect = [1.0, 1.0, 0.5, 0.5, 1.0, 1.0];
        for (got, want) in sel.confidences.iter().zip(expect) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
        assert!(sel.confidences.iter().all(|&c| (0.0..=1.0).contains(&c)));
    }

    #[test]
    fn sknn_covers_isolated_classes() {
        // Both clusters are pure: every confidence is 1, so threshold
        // selection alone would return nothing.
        let a = array![[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]];
        let labels = vec![1, 1, 1, 2, 2, 2];
        let sel = sknn_select_basis(&a, &labels, 2, 0.9).unwrap();
        assert_eq!(sel.basis_indices, vec![0, 3]);
    }

    #[test]
    fn sknn_validates_inputs() {
        let (a, labels) = six_point_line();
        assert!(matches!(
            sknn_select_basis(&a, &labels, 6, 0.9),
            Err(Error::KTooLarge { .. })
        ));
        assert!(matches!(
            sknn_select_basis(&a, &labels, 2, 0.0),
            Err(Error::InvalidThreshold(_))
        ));
        assert!(matches!(
            sknn_select_basis(&a, &labels, 2, 1.5),
            Err(Error::InvalidThreshold(_))
        ));
        let gappy = vec![1, 1, 1, 3, 3, 3];
        assert!(matches!(
            sknn_select_basis(&a, &gappy, 2, 0.9),
            Err(Error::EmptyClass(2))
        ));
    }

    #[test]
    fn fixed_size_selection_takes_lowest_confidence() {
        let (a, labels) = six_point_line();
        let sel = sknn_select_basis_fixed(&a, &labels, 2, 4).unwrap();
        // Confidences: 0.5 at indices 2 and 3, then ties at 1.0 resolved by index.
        assert_eq!(sel.basis_indices, vec![0, 1, 2, 3]);
        let all = sknn_select_basis_fixed(&a, &labels, 2, 6).unwrap();
        assert_eq!(all.basis_indices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn training_fits_separable_blobs() {
        let ds = crate::data::synthetic_blobs(3, &[20, 20], 9.0, 21).unwrap();
        let params = NrbfnParams {
            k: 5,
            ..NrbfnParams::default()
        };
        let model = nrbfn_train(&ds.features, &ds.labels, params).unwrap();
        assert!(model.basis_indices.len() >= 2);
        let pred = nrbfn_predict(&model, &ds.features).unwrap();
        assert_eq!(pred.labels, ds.labels);
        // The training design matrix is column stochastic.
        let wt = model.design_matrix(&ds.features).unwrap();
        for j in 0..ds.n_samples() {
            assert_abs_diff_eq!(wt.w_tilde.column(j).sum(), 1.0, epsilon = 1e-12);
        }
        assert!(model.diagnostics.epsilon >= 1.0 - 1e-9);
        assert!(model.diagnostics.gamma >= 1.0 - 1e-9);
    }

    #[test]
    fn training_solution_columns_sum_to_one_unregularized() {
        // 1^T X* = 1^T whenever lambda = 0 and W~ has full row rank: the
        // all-ones vector is reproduced because columns of W~ sum to one.
        let ds = crate::data::synthetic_blobs(2, &[12, 12, 12], 7.0, 33).unwrap();
        let params = NrbfnParams {
            lambda: 0.0,
            k: 4,
            t: 0.9,
        };
        let model = nrbfn_train(&ds.features, &ds.labels, params).unwrap();
        for j in 0..model.weights.ncols() {
            assert_abs_diff_eq!(model.weights.column(j).sum(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn duplicate_basis_vectors_are_a_rank_error_without_ridge() {
        let a = array![[0.0, 0.0, 5.0, 5.0]];
        let labels = vec![1, 1, 2, 2];
        let err = nrbfn_train_with_basis(&a, &labels, &[0, 1, 2], 0.0);
        assert!(matches!(err, Err(Error::RankDeficient(_))));
        assert!(nrbfn_train_with_basis(&a, &labels, &[0, 1, 2], 1e-10).is_ok());
    }

    #[test]
    fn prediction_handles_overflowed_distances() {
        let ds = crate::data::synthetic_blobs(2, &[8, 8], 8.0, 55).unwrap();
        let params = NrbfnParams {
            k: 3,
            ..NrbfnParams::default()
        };
        let model = nrbfn_train(&ds.features, &ds.labels, params).unwrap();
        let huge = Array2::from_elem((2, 1), 1e200);
        let pred = nrbfn_predict(&model, &huge).unwrap();
        assert_eq!(pred.labels.len(), 1);
        let s = pred.scores.column(0);
        assert_eq!(s.iter().copied().fold(0.0, f64::max), 1.0);
        assert_eq!(s.sum(), 1.0);
    }

    #[test]
    fn prediction_validates_feature_count() {
        let ds = crate::data::synthetic_blobs(3, &[8, 8], 8.0, 55).unwrap();
        let model = nrbfn_train(
            &ds.features,
            &ds.labels,
            NrbfnParams {
                k: 3,
                ..NrbfnParams::default()
            },
        )
        .unwrap();
        let wrong = Array2::zeros((2, 4));
        assert!(matches!(
            nrbfn_predict(&model, &wrong),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
