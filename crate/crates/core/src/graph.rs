//! Similarity graphs over column-sample data: Gaussian and linear-augmented
//! kernels, column normalization, graph Laplacians, and the structural
//! checks (ideal block condition, idealization, perturbation statistics)
//! that the risk diagnostics build on.
//!
//! A similarity matrix `W` is indexed `W[[i, j]]` = similarity of basis
//! sample `i` to sample `j`; its column-normalized form `W~` is column
//! stochastic. The *ideal condition* holds when every cross-class entry is
//! zero, i.e. `W~` is block diagonal under a per-class ordering.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ensure_matrix, thin_svd};

/// Which kernel produced a similarity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Gaussian,
    LinearAugmented,
}

/// A raw (unnormalized) similarity matrix with non-negative entries.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub w: Array2<f64>,
    pub kind: KernelKind,
    /// Kernel width for Gaussian similarities; `None` for linear-augmented.
    pub sigma: Option<f64>,
}

impl SimilarityMatrix {
    pub fn normalize(&self) -> Result<NormalizedSimilarity> {
        column_normalize(&self.w)
    }
}

/// A column-stochastic similarity matrix together with the pre-normalization
/// column sums, so callers can recover the raw scale.
#[derive(Debug, Clone)]
pub struct NormalizedSimilarity {
    /// Column-stochastic matrix: non-negative, every column sums to one.
    pub w_tilde: Array2<f64>,
    /// Column sums of the matrix that was normalized (all positive).
    pub column_sums: Array1<f64>,
}

/// Outcome of an ideal-condition test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IdealCheck {
    pub satisfied: bool,
    /// Largest absolute cross-class entry found.
    pub max_violation: f64,
    pub tolerance: f64,
}

/// Size and perturbation measures for a decomposition `W~' = W~ + dW` of a
/// noisy normalized similarity into an ideal part plus noise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerturbationStats {
    /// `||dW||_2 / sigma_min(W~)`: the relative spectral perturbation.
    pub xi: f64,
    /// `||dW||_F / ||W~||_F`; never exceeds `xi`.
    pub delta: f64,
    /// Square root of the largest-to-smallest class size ratio.
    pub n_rho: f64,
    /// Square root of the largest-to-smallest per-class basis size ratio.
    pub r_rho: f64,
    /// Smallest singular value of the ideal part.
    pub sigma_min: f64,
    /// Spectral norm of the noise.
    pub noise_spectral_norm: f64,
    /// Whether `xi < 1 / n_rho`, the premise of the perturbation bounds.
    pub condition_met: bool,
    /// Bound on the noisy fitting-error ratio; present when the premise holds.
    pub error_bound: Option<f64>,
    /// Multiplier on the ideal risk bounding the noisy risk; present when the
    /// premise holds.
    pub risk_bound_factor: Option<f64>,
}

/// `W[[i, j]] = exp(-Q[[i, j]]^2 / (2 sigma^2))` for a matrix `Q` of
/// (non-squared) Euclidean distances.
pub fn gaussian_kernel(q: &Array2<f64>, sigma: f64) -> Result<SimilarityMatrix> {
    ensure_matrix("distance matrix", q.view())?;
    if sigma <= 0.0 || sigma.is_nan() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if let Some(&bad) = q.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeDistance(bad));
    }
    let denom = 2.0 * sigma * sigma;
    let w = q.mapv(|d| (-(d * d) / denom).exp());
    Ok(SimilarityMatrix {
        w,
        kind: KernelKind::Gaussian,
        sigma: Some(sigma),
    })
}

/// Divides every column by its sum.
pub fn column_normalize(w: &Array2<f64>) -> Result<NormalizedSimilarity> {
    ensure_matrix("similarity matrix", w.view())?;
    let sums: Array1<f64> = w.sum_axis(ndarray::Axis(0));
    if let Some((j, _)) = sums.iter().enumerate().find(|(_, &s)| s == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let w_tilde = w / &sums.view().insert_axis(ndarray::Axis(0));
    Ok(NormalizedSimilarity {
        w_tilde,
        column_sums: sums,
    })
}

/// Gaussian kernel fused with column normalization, evaluated from *squared*
/// distances in a per-column shifted log domain: subtracting the column
/// minimum before exponentiation makes the largest kernel value exactly one,
/// so a column can never underflow to all zeros. The normalized result is
/// the same as `column_normalize(gaussian_kernel(...))` up to round-off.
pub fn normalized_gaussian_from_sq_dists(
    sq: &Array2<f64>,
    sigma: f64,
) -> Result<NormalizedSimilarity> {
    ensure_shifted_input(sq, sigma)?;
    let denom = 2.0 * sigma * sigma;
    let mut w = Array2::zeros(sq.dim());
    let mut sums = Array1::zeros(sq.ncols());
    for (j, col) in sq.axis_iter(ndarray::Axis(1)).enumerate() {
        let m = col.iter().copied().fold(f64::INFINITY, f64::min);
        if !m.is_finite() {
            return Err(Error::DegenerateColumn(j));
        }
        let mut sum = 0.0;
        for (i, &d) in col.iter().enumerate() {
            let v = (-((d - m) / denom)).exp();
            w[[i, j]] = v;
            sum += v;
        }
        for i in 0..sq.nrows() {
            w[[i, j]] /= sum;
        }
        sums[j] = sum;
    }
    Ok(NormalizedSimilarity {
        w_tilde: w,
        column_sums: sums,
    })
}

fn ensure_shifted_input(sq: &Array2<f64>, sigma: f64) -> Result<()> {
    if sq.is_empty() {
        return Err(Error::Empty("squared-distance matrix"));
    }
    if sigma <= 0.0 || sigma.is_nan() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    // +inf entries are allowed (overflowed distances); NaN and negatives are not.
    if let Some(&bad) = sq.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeDistance(bad));
    }
    if sq.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("squared-distance matrix"));
    }
    Ok(())
}

/// Builds the shifted linear kernel `W = A^T A + beta` with
/// `beta = -min_ij (A^T A)_ij`, the smallest shift that makes every entry
/// non-negative. Returns the kernel and `beta`.
///
/// `a` must be mean-removed: the row-mean vector may deviate from zero by at
/// most `1e-8 ||A||_F`. For such data the entries of `A^T A` sum to zero, so
/// a negative entry always exists unless `A` vanishes entirely.
pub fn linear_augmented_similarity(a: &Array2<f64>) -> Result<(SimilarityMatrix, f64)> {
    ensure_matrix("data matrix", a.view())?;
    let n = a.ncols() as f64;
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dev = a
        .sum_axis(ndarray::Axis(1))
        .iter()
        .map(|s| (s / n) * (s / n))
        .sum::<f64>()
        .sqrt();
    let tolerance = 1e-8 * norm;
    if dev > tolerance {
        return Err(Error::NotMeanRemoved {
            deviation: dev,
            tolerance,
        });
    }
    let m = a.t().dot(a);
    let min = m.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return Err(Error::DegenerateData);
    }
    let beta = -min;
    let w = m.mapv(|v| v + beta);
    Ok((
        SimilarityMatrix {
            w,
            kind: KernelKind::LinearAugmented,
            sigma: None,
        },
        beta,
    ))
}

/// Unnormalized graph Laplacian `L = diag(1^T W) - W` of a square symmetric
/// similarity matrix. Symmetry is required within `1e-10` relative to the
/// largest entry magnitude.
pub fn laplacian(w: &Array2<f64>) -> Result<Array2<f64>> {
    ensure_matrix("similarity matrix", w.view())?;
    let (rows, cols) = w.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut asym = 0.0f64;
    for i in 0..rows {
        for j in (i + 1)..cols {
            asym = asym.max((w[[i, j]] - w[[j, i]]).abs());
        }
    }
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let degrees = w.sum_axis(ndarray::Axis(0));
    let mut l = -w.clone();
    for i in 0..rows {
        l[[i, i]] += degrees[i];
    }
    Ok(l)
}

/// Suggested tolerance for [`check_ideal_condition`]: `1e-10` relative to the
/// largest entry magnitude.
pub fn default_ideal_tol(w: &Array2<f64>) -> f64 {
    1e-10 * w.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Tests whether every cross-class entry of `w` is zero within `tol`.
///
/// `w` is `r x n` with row `i` belonging to class `basis_labels[i]` and
/// column `j` to class `labels[j]`; square kernels pass the same labels twice.
pub fn check_ideal_condition(
    w: &Array2<f64>,
    labels: &[usize],
    basis_labels: &[usize],
    tol: f64,
) -> Result<IdealCheck> {
    ensure_matrix("similarity matrix", w.view())?;
    check_label_dims(w, labels, basis_labels)?;
    let mut max_violation = 0.0f64;
    for (i, row) in w.axis_iter(ndarray::Axis(0)).enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if basis_labels[i] != labels[j] {
                max_violation = max_violation.max(v.abs());
            }
        }
    }
    Ok(IdealCheck {
        satisfied: max_violation <= tol,
        max_violation,
        tolerance: tol,
    })
}

fn check_label_dims(w: &Array2<f64>, labels: &[usize], basis_labels: &[usize]) -> Result<()> {
    if labels.len() != w.ncols() || basis_labels.len() != w.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "similarity is {} x {} but got {} basis labels and {} sample labels",
            w.nrows(),
            w.ncols(),
            basis_labels.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Splits a noisy column-stochastic matrix into its nearest ideal part and a
/// noise remainder: cross-class entries are zeroed and each column is
/// renormalized over its within-class mass. Returns the ideal matrix (with
/// the within-class masses as its `column_sums`) and `dW = W~' - W~`, so the
/// input is reconstructed exactly as `W~ + dW`.
pub fn idealize(
    wt: &NormalizedSimilarity,
    labels: &[usize],
    basis_labels: &[usize],
) -> Result<(NormalizedSimilarity, Array2<f64>)> {
    let w = &wt.w_tilde;
    ensure_matrix("normalized similarity", w.view())?;
    check_label_dims(w, labels, basis_labels)?;
    let (r, n) = w.dim();
    let mut ideal = Array2::zeros((r, n));
    let mut masses = Array1::zeros(n);
    for j in 0..n {
        let mut mass = 0.0;
        for i in 0..r {
            if basis_labels[i] == labels[j] {
                mass += w[[i, j]];
            }
        }
        if mass == 0.0 {
            return Err(Error::OrphanColumn { col: j });
        }
        for i in 0..r {
            if basis_labels[i] == labels[j] {
                ideal[[i, j]] = w[[i, j]] / mass;
            }
        }
        masses[j] = mass;
    }
    let dw = w - &ideal;
    Ok((
        NormalizedSimilarity {
            w_tilde: ideal,
            column_sums: masses,
        },
        dw,
    ))
}

/// Measures a perturbation `dw` of an ideal normalized similarity `wt` and
/// evaluates the premises and bounds of the perturbed-risk theory.
///
/// `class_counts[k]` is the number of samples and `basis_counts[k]` the
/// number of basis vectors of class `k + 1`; all must be positive.
pub fn perturbation_stats(
    wt: &NormalizedSimilarity,
    dw: &Array2<f64>,
    class_counts: &[usize],
    basis_counts: &[usize],
) -> Result<PerturbationStats> {
    let w = &wt.w_tilde;
    ensure_matrix("ideal similarity", w.view())?;
    if dw.dim() != w.dim() {
        return Err(Error::DimensionMismatch(format!(
            "noise is {:?} but similarity is {:?}",
            dw.dim(),
            w.dim()
        )));
    }
    let sigma_min = {
        let svd = thin_svd(w)?;
        svd.sigma[svd.sigma.len() - 1]
    };
    if sigma_min <= 1e-12 {
        return Err(Error::RankDeficient(sigma_min));
    }
    let noise_spectral_norm = if dw.iter().all(|&v| v == 0.0) {
        0.0
    } else {
        thin_svd(dw)?.sigma[0]
    };
    let frob = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let xi = noise_spectral_norm / sigma_min;
    let delta = frob(dw) / frob(w);

    let n_rho = count_ratio_sqrt(class_counts)?;
    let r_rho = count_ratio_sqrt(basis_counts)?;
    let condition_met = xi < 1.0 / n_rho;
    let (error_bound, risk_bound_factor) = if condition_met {
        let hurt = n_rho * xi / (1.0 - n_rho * xi);
        let grow = (1.0 + delta) * (1.0 + r_rho * xi) / (1.0 - n_rho * xi);
        (Some(hurt * hurt + 1.0), Some(grow * grow))
    } else {
        (None, None)
    };

    Ok(PerturbationStats {
        xi,
        delta,
        n_rho,
        r_rho,
        sigma_min,
        noise_spectral_norm,
        condition_met,
        error_bound,
        risk_bound_factor,
    })
}

fn count_ratio_sqrt(counts: &[usize]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::Empty("class counts"));
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(k + 1));
    }
    let max = *counts.iter().max().expect("non-empty") as f64;
    let min = *counts.iter().min().expect("non-empty") as f64;
    Ok((max / min).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn gaussian_kernel_matches_scalar_formula() {
        let sigma = 0.7;
        // Q entry of sigma * sqrt(2) maps to exp(-1).
        let q = array![[sigma * std::f64::consts::SQRT_2]];
        let sim = gaussian_kernel(&q, sigma).unwrap();
        assert_abs_diff_eq!(sim.w[[0, 0]], (-1.0f64).exp(), epsilon = 1e-15);

        let mut rng = crate::testutil::rng(3);
        let q = crate::testutil::random_matrix(&mut rng, 4, 6).mapv(f64::abs);
        let sim = gaussian_kernel(&q, sigma).unwrap();
        for (w, d) in sim.w.iter().zip(q.iter()) {
            let expected = (-(d * d) / (2.0 * sigma * sigma)).exp();
            assert_abs_diff_eq!(*w, expected, epsilon = 1e-15);
            assert!(*w > 0.0 && *w <= 1.0);
        }
    }

    #[test]
    fn gaussian_kernel_validates_input() {
        let q = array![[1.0]];
        assert!(matches!(
            gaussian_kernel(&q, 0.0),
            Err(Error::NonPositiveSigma(_))
        ));
        assert!(matches!(
            gaussian_kernel(&q, -1.0),
            Err(Error::NonPositiveSigma(_))
        ));
        let neg = array![[-0.5]];
        assert!(matches!(
            gaussian_kernel(&neg, 1.0),
            Err(Error::NegativeDistance(_))
        ));
    }

    #[test]
    fn column_normalize_makes_columns_stochastic() {
        let w = array![[1.0, 3.0], [1.0, 1.0]];
        let norm = column_normalize(&w).unwrap();
        assert_abs_diff_eq!(norm.w_tilde[[0, 1]], 0.75, epsilon = 1e-15);
        assert_eq!(norm.column_sums.to_vec(), vec![2.0, 4.0]);
        for j in 0..2 {
            let s: f64 = norm.w_tilde.column(j).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn column_normalize_rejects_zero_column() {
        let w = array![[1.0, 0.0], [1.0, 0.0]];
        assert!(matches!(column_normalize(&w), Err(Error::ZeroColumn(1))));
    }

    #[test]
    fn shifted_kernel_agrees_with_plain_route() {
        let mut rng = crate::testutil::rng(5);
        let sq = crate::testutil::random_matrix(&mut rng, 5, 7).mapv(|v| v.abs() * 3.0);
        let sigma = 0.9;
        let shifted = normalized_gaussian_from_sq_dists(&sq, sigma).unwrap();
        let plain = gaussian_kernel(&sq.mapv(f64::sqrt), sigma)
            .unwrap()
            .normalize()
            .unwrap();
        for (a, b) in shifted.w_tilde.iter().zip(plain.w_tilde.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn shifted_kernel_survives_extreme_distances() {
        // Plain evaluation of exp(-1e6) underflows to an all-zero column;
        // the shifted form keeps the column stochastic.
        let sq = array![[1e6, 0.0], [2e6, 1.0]];
        let norm = normalized_gaussian_from_sq_dists(&sq, 0.01).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(norm.w_tilde.column(j).sum(), 1.0, epsilon = 1e-12);
        }
        assert_eq!(norm.w_tilde[[0, 0]], 1.0);

        let degenerate = array![[f64::INFINITY], [f64::INFINITY]];
        assert!(matches!(
            normalized_gaussian_from_sq_dists(&degenerate, 1.0),
            Err(Error::DegenerateColumn(0))
        ));
    }

    #[test]
    fn linear_augmented_two_point_example() {
        let a = array![[1.0, -1.0]];
        let (sim, beta) = linear_augmented_similarity(&a).unwrap();
        assert_eq!(beta, 1.0);
        assert_eq!(sim.w, array![[2.0, 0.0], [0.0, 2.0]]);
    }

    /// Two classes with antipodal means along a shared axis and spreads in
    /// mutually orthogonal directions: every cross-class inner product equals
    /// the global minimum, so the shifted kernel is exactly block diagonal.
    pub(crate) fn ideal_four_point_data() -> (Array2<f64>, Vec<usize>) {
        let a = array![
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, -1.0],
        ];
        (a, vec![1, 1, 2, 2])
    }

    #[test]
    fn linear_augmented_ideal_construction_is_block_diagonal() {
        let (a, labels) = ideal_four_point_data();
        let (sim, beta) = linear_augmented_similarity(&a).unwrap();
        assert_eq!(beta, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                if labels[i] != labels[j] {
                    assert_eq!(sim.w[[i, j]], 0.0, "cross-class entry at {i},{j}");
                }
            }
        }
        let check = check_ideal_condition(&sim.w, &labels, &labels, 1e-10).unwrap();
        assert!(check.satisfied);
        assert_eq!(check.max_violation, 0.0);
    }

    #[test]
    fn linear_augmented_rejects_uncentered_data() {
        let a = array![[1.0, 2.0]];
        assert!(matches!(
            linear_augmented_similarity(&a),
            Err(Error::NotMeanRemoved { .. })
        ));
    }

    #[test]
    fn laplacian_two_point_example() {
        let w = array![[0.0, 1.0], [1.0, 0.0]];
        let l = laplacian(&w).unwrap();
        assert_eq!(l, array![[1.0, -1.0], [-1.0, 1.0]]);
    }

    #[test]
    fn laplacian_annihilates_constants_and_is_psd() {
        use ndarray_linalg::{Eigh, UPLO};
        let mut rng = crate::testutil::rng(9);
        for _ in 0..10 {
            let n = crate::testutil::usize_in(&mut rng, 2, 8);
            let raw = crate::testutil::random_matrix(&mut rng, n, n).mapv(f64::abs);
            let w = &raw + &raw.t();
            let l = laplacian(&w).unwrap();
            let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let ones = Array1::ones(n);
            let l1 = l.dot(&ones);
            assert!(l1.iter().all(|v| v.abs() <= 1e-10 * scale.max(1.0)));
            let (eigs, _) = l.eigh(UPLO::Lower).unwrap();
            assert!(eigs.iter().all(|&e| e >= -1e-10 * scale.max(1.0)));
        }
    }

    #[test]
    fn laplacian_of_linear_augmented_matches_augmented_gram() {
        // L = n * beta * I - At^T At for the augmented matrix At = [sqrt(beta) 1^T; A].
        let (a, _) = ideal_four_point_data();
        let (sim, beta) = linear_augmented_similarity(&a).unwrap();
        let l = laplacian(&sim.w).unwrap();
        let n = a.ncols();
        let mut at = Array2::zeros((a.nrows() + 1, n));
        at.row_mut(0).fill(beta.sqrt());
        at.slice_mut(ndarray::s![1.., ..]).assign(&a);
        let mut expected = -at.t().dot(&at);
        for i in 0..n {
            expected[[i, i]] += n as f64 * beta;
        }
        for (x, y) in l.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn laplacian_validates_shape() {
        let rect = Array2::<f64>::zeros((2, 3));
        assert!(matches!(laplacian(&rect), Err(Error::NotSquare { .. })));
        let asym = array![[0.0, 1.0], [0.5, 0.0]];
        assert!(matches!(laplacian(&asym), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn ideal_check_reports_largest_cross_entry() {
        let w = array![[1.0, 1e-9], [0.0, 1.0]];
        let labels = vec![1, 2];
        let check = check_ideal_condition(&w, &labels, &labels, 1e-10).unwrap();
        assert!(!check.satisfied);
        assert_abs_diff_eq!(check.max_violation, 1e-9, epsilon = 1e-24);
        let loose = check_ideal_condition(&w, &labels, &labels, 1e-8).unwrap();
        assert!(loose.satisfied);
    }

    #[test]
    fn idealize_round_trips_and_renormalizes() {
        let mut rng = crate::testutil::rng(31);
        let labels = vec![1, 1, 2, 2, 2];
        let basis_labels = vec![1, 2, 2];
        let raw = crate::testutil::random_matrix(&mut rng, 3, 5).mapv(|v| v.abs() + 0.05);
        let wt = column_normalize(&raw).unwrap();
        let (ideal, dw) = idealize(&wt, &labels, &basis_labels).unwrap();
        for j in 0..5 {
            assert_abs_diff_eq!(ideal.w_tilde.column(j).sum(), 1.0, epsilon = 1e-12);
            for i in 0..3 {
                if basis_labels[i] != labels[j] {
                    assert_eq!(ideal.w_tilde[[i, j]], 0.0);
                }
                let recon = ideal.w_tilde[[i, j]] + dw[[i, j]];
                assert_abs_diff_eq!(recon, wt.w_tilde[[i, j]], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn idealize_rejects_orphan_columns() {
        // Column 2 (class 2) has all mass on the class-1 basis row.
        let w = array![[1.0, 1.0, 1.0], [1.0, 1.0, 0.0]];
        let wt = column_normalize(&w).unwrap();
        let out = idealize(&wt, &[1, 1, 2], &[1, 2]);
        assert!(matches!(out, Err(Error::OrphanColumn { col: 2 })));
    }

    #[test]
    fn perturbation_stats_small_noise() {
        let labels = vec![1, 1, 1, 1, 2];
        let basis_labels = vec![1, 2];
        // Ideal part: class-1 columns on row 0, class-2 column on row 1.
        let ideal_raw = array![[1.0, 1.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]];
        let noise = 0.02
            * crate::testutil::random_matrix(&mut crate::testutil::rng(41), 2, 5).mapv(f64::abs);
        let noisy = column_normalize(&(&ideal_raw + &noise)).unwrap();
        let (ideal, dw) = idealize(&noisy, &labels, &basis_labels).unwrap();
        let stats = perturbation_stats(&ideal, &dw, &[4, 1], &[1, 1]).unwrap();
        assert_eq!(stats.n_rho, 2.0);
        assert_eq!(stats.r_rho, 1.0);
        assert!(stats.delta <= stats.xi + 1e-15);
        assert!(stats.condition_met, "xi = {} too large", stats.xi);
        assert!(stats.error_bound.unwrap() >= 1.0);
        assert!(stats.risk_bound_factor.unwrap() >= 1.0);
    }

    #[test]
    fn perturbation_stats_rejects_rank_deficiency() {
        let wt = NormalizedSimilarity {
            w_tilde: array![[0.5, 0.5], [0.5, 0.5]],
            column_sums: array![1.0, 1.0],
        };
        let dw = Array2::zeros((2, 2));
        assert!(matches!(
            perturbation_stats(&wt, &dw, &[1, 1], &[1, 1]),
            Err(Error::RankDeficient(_))
        ));
    }
}
