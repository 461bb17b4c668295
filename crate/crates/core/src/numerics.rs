//! Dense numerical kernels shared by the classifiers and diagnostics:
//! thin SVD, ridge-regularized least squares, pairwise squared distances,
//! and exact k-nearest-neighbour search.
//!
//! All routines are deterministic for a fixed input: LAPACK backs the
//! factorizations, matrix products go through `ndarray`'s `dot`, and every
//! tie in neighbour selection is broken by the lower sample index.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{FactorizeC, JobSvd, SVDDC, UPLO};

use crate::error::{Error, Result};

/// Reciprocal-condition threshold below which a zero-regularization Gram
/// system is reported as singular instead of being solved.
pub const RCOND_SINGULAR: f64 = 1e-14;
/// Reciprocal-condition threshold below which the Gram route is abandoned
/// in favour of the SVD route.
pub const RCOND_GRAM_FALLBACK: f64 = 1e-12;

/// Thin singular value decomposition `M = U diag(sigma) Vt` with
/// `m = min(rows, cols)` retained components.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// Left singular vectors, `rows x m`, orthonormal columns.
    pub u: Array2<f64>,
    /// Singular values in non-increasing order, all non-negative.
    pub sigma: Array1<f64>,
    /// Right singular vectors stored as rows, `m x cols`.
    pub vt: Array2<f64>,
}

impl ThinSvd {
    /// Multiplies the three factors back together; intended for residual checks.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.u * &self.sigma.view().insert_axis(Axis(0));
        scaled.dot(&self.vt)
    }

    /// Number of singular values above `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let max = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().take_while(|&&s| s > tol * max).count()
    }
}

/// Result of a k-nearest-neighbour search: column `j` of both arrays
/// describes the `k` nearest samples to sample `j`, nearest first.
#[derive(Debug, Clone)]
pub struct Knn {
    /// Neighbour sample indices, `k x n`.
    pub indices: Array2<usize>,
    /// Squared Euclidean distances matching `indices`, `k x n`.
    pub sq_dists: Array2<f64>,
}

pub(crate) fn ensure_matrix(name: &'static str, m: ArrayView2<f64>) -> Result<()> {
    if m.is_empty() {
        return Err(Error::Empty(name));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    Ok(())
}

/// Computes the thin SVD of `m` via the divide-and-conquer LAPACK driver.
pub fn thin_svd(m: &Array2<f64>) -> Result<ThinSvd> {
    ensure_matrix("SVD input", m.view())?;
    let (u, sigma, vt) = m
        .svddc(JobSvd::Some)
        .map_err(|_| Error::ConvergenceFailure)?;
    let u = u.expect("JobSvd::Some returns U");
    let vt = vt.expect("JobSvd::Some returns VT");
    Ok(ThinSvd { u, sigma, vt })
}

/// Solves the ridge problem `min_D ||F - D A||_F^2 + lambda' ||D||_F^2`
/// in closed form, `D = F A^T (A A^T + lambda' I)^-1`.
///
/// `a` is `r x n`, `f` is `K x n`; the result is `K x r`. The normal-equation
/// route through the `r x r` Gram matrix is used when it is well conditioned;
/// otherwise the solution is assembled from the thin SVD of `a`, which also
/// serves as the independent route for diagnostics cross-checks
/// (`D = F V^T diag(sigma_i / (sigma_i^2 + lambda')) U^T`).
pub fn ridge_solve(a: &Array2<f64>, f: &Array2<f64>, lambda_prime: f64) -> Result<Array2<f64>> {
    ensure_matrix("ridge data matrix", a.view())?;
    ensure_matrix("ridge target matrix", f.view())?;
    if a.ncols() != f.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns but target has {}",
            a.ncols(),
            f.ncols()
        )));
    }
    if lambda_prime < 0.0 || lambda_prime.is_nan() {
        return Err(Error::NegativeRegularization(lambda_prime));
    }

    let r = a.nrows();
    if r > a.ncols() {
        // A A^T has rank at most n < r, so the unregularized system is
        // singular outright; otherwise solve through the n x n Gram matrix
        // via the push-through identity A^T (A A^T + c I)^-1 = (A^T A + c I)^-1 A^T.
        if lambda_prime == 0.0 {
            return Err(Error::SingularSystem { rcond: 0.0 });
        }
        return ridge_solve_dual(a, f, lambda_prime);
    }
    let mut gram = a.dot(&a.t());
    for i in 0..r {
        gram[[i, i]] += lambda_prime;
    }

    let rcond = gram_rcond(&gram);
    if lambda_prime == 0.0 && rcond < RCOND_SINGULAR {
        return Err(Error::SingularSystem { rcond });
    }
    if rcond < RCOND_GRAM_FALLBACK {
        return ridge_solve_svd(a, f, lambda_prime);
    }

    match gram.factorizec(UPLO::Lower) {
        Ok(chol) => {
            // D^T = (A A^T + lambda' I)^-1 (A F^T), one triangular solve per class.
            let rhs = a.dot(&f.t());
            let mut dt = Array2::zeros((r, f.nrows()));
            for (k, col) in rhs.axis_iter(Axis(1)).enumerate() {
                let mut b = col.to_owned();
                ndarray_linalg::SolveC::solvec_inplace(&chol, &mut b)
                    .map_err(|_| Error::ConvergenceFailure)?;
                dt.column_mut(k).assign(&b);
            }
            Ok(dt.t().to_owned())
        }
        // Indefiniteness despite an acceptable condition estimate: fall back.
        Err(_) => ridge_solve_svd(a, f, lambda_prime),
    }
}

fn ridge_solve_dual(a: &Array2<f64>, f: &Array2<f64>, lambda_prime: f64) -> Result<Array2<f64>> {
    let n = a.ncols();
    let mut gram = a.t().dot(a);
    for i in 0..n {
        gram[[i, i]] += lambda_prime;
    }
    if gram_rcond(&gram) < RCOND_GRAM_FALLBACK {
        return ridge_solve_svd(a, f, lambda_prime);
    }
    match gram.factorizec(UPLO::Lower) {
        Ok(chol) => {
            let mut x = Array2::zeros((n, f.nrows()));
            for (k, col) in f.t().axis_iter(Axis(1)).enumerate() {
                let mut b = col.to_owned();
                ndarray_linalg::SolveC::solvec_inplace(&chol, &mut b)
                    .map_err(|_| Error::ConvergenceFailure)?;
                x.column_mut(k).assign(&b);
            }
            Ok(x.t().dot(&a.t()))
        }
        Err(_) => ridge_solve_svd(a, f, lambda_prime),
    }
}

fn gram_rcond(gram: &Array2<f64>) -> f64 {
    use ndarray_linalg::{Factorize, ReciprocalConditionNum};
    match gram.factorize() {
        Ok(lu) => lu.rcond().unwrap_or(0.0),
        // An exactly singular factorization counts as rcond zero.
        Err(_) => 0.0,
    }
}

fn ridge_solve_svd(a: &Array2<f64>, f: &Array2<f64>, lambda_prime: f64) -> Result<Array2<f64>> {
    let svd = thin_svd(a)?;
    let factors: Array1<f64> = svd
        .sigma
        .iter()
        .map(|&s| {
            let denom = s * s + lambda_prime;
            if denom > 0.0 {
                s / denom
            } else {
                0.0
            }
        })
        .collect();
    // F V^T, scaled per component, times U^T.
    let fv = f.dot(&svd.vt.t());
    let scaled = &fv * &factors.view().insert_axis(Axis(0));
    Ok(scaled.dot(&svd.u.t()))
}

/// Squared Euclidean distances between the columns of `x` (`p x r`) and the
/// columns of `y` (`p x n`), returned as an `r x n` matrix.
///
/// Uses the Gram expansion `||x||^2 + ||y||^2 - 2 x^T y`; small negative
/// round-off values are clamped to zero, and an overflowed entry becomes
/// `+inf` rather than NaN.
pub fn pairwise_sq_dists(x: &Array2<f64>, y: &Array2<f64>) -> Result<Array2<f64>> {
    ensure_matrix("distance input x", x.view())?;
    ensure_matrix("distance input y", y.view())?;
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} rows but y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let xs: Array1<f64> = x.axis_iter(Axis(1)).map(|c| c.dot(&c)).collect();
    let ys: Array1<f64> = y.axis_iter(Axis(1)).map(|c| c.dot(&c)).collect();
    let mut d = x.t().dot(y);
    for (i, mut row) in d.axis_iter_mut(Axis(0)).enumerate() {
        let xi = xs[i];
        for (j, v) in row.iter_mut().enumerate() {
            let dist = xi + ys[j] - 2.0 * *v;
            *v = if dist.is_nan() {
                f64::INFINITY
            } else {
                dist.max(0.0)
            };
        }
    }
    Ok(d)
}

/// Exact k-nearest-neighbour search among the columns of `a`, excluding each
/// sample itself. Distance ties are broken by the lower sample index, so the
/// result is a pure function of the input.
pub fn knn_search(a: &Array2<f64>, k: usize) -> Result<Knn> {
    ensure_matrix("knn input", a.view())?;
    let n = a.ncols();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }

    let mut indices = Array2::zeros((k, n));
    let mut sq_dists = Array2::zeros((k, n));
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n - 1);

    // Process columns in blocks so the distance buffer stays at O(n * block).
    const BLOCK: usize = 512;
    let mut start = 0;
    while start < n {
        let stop = usize::min(start + BLOCK, n);
        let block = a.slice(ndarray::s![.., start..stop]).to_owned();
        let d = pairwise_sq_dists(a, &block)?;
        for j in start..stop {
            scratch.clear();
            scratch.extend(
                d.column(j - start)
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(i, &dist)| (dist, i)),
            );
            scratch.select_nth_unstable_by(k - 1, |l, r| l.0.total_cmp(&r.0).then(l.1.cmp(&r.1)));
            scratch[..k].sort_unstable_by(|l, r| l.0.total_cmp(&r.0).then(l.1.cmp(&r.1)));
            for (rank, &(dist, i)) in scratch[..k].iter().enumerate() {
                indices[[rank, j]] = i;
                sq_dists[[rank, j]] = dist;
            }
        }
        start = stop;
    }

    Ok(Knn { indices, sq_dists })
}
