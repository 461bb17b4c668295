//! Fitting-error and spectral-risk diagnostics for regularized
//! least-squares classifiers.
//!
//! For a solution `D` of `min ||F - D A||_F^2 + lambda' ||D||_F^2` the
//! report measures
//!
//! * `f = ||F - D A||_F^2` — the fitting error,
//! * `epsilon = f / ||D A||_F^2 + 1` — the relative fitting error (>= 1),
//! * `alpha = ||D||_F^2` — the solution energy,
//! * `gamma = ||D||_F^2 ||A||_F^2 / ||D A||_F^2` — the spectral risk (>= 1),
//!
//! and verifies the tradeoff identity `g(D) / ||D A||_F^2 = epsilon +
//! lambda * gamma - 1` (with `g` the regularized objective) along two
//! independent routes: direct norms of the solved system, and closed-form
//! expressions in the singular values of `A`. Everything downstream —
//! ideal-case bounds, perturbation bounds, regularization monotonicity, and
//! per-class subspace gaps — reduces to these quantities.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    check_ideal_condition, default_ideal_tol, idealize, perturbation_stats, IdealCheck,
    NormalizedSimilarity, PerturbationStats,
};
use crate::numerics::{ensure_matrix, ridge_solve, thin_svd};

fn sq_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Smallest `||D A||_F^2` treated as non-degenerate; below it the risk is
/// reported as infinite rather than overflowing quietly.
const MIN_PROJECTED_NORM: f64 = 1e-300;

/// Serializes possibly non-finite floats as the strings "inf"/"-inf"/"nan".
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            v.serialize(s)
        } else if v.is_nan() {
            "nan".serialize(s)
        } else if *v > 0.0 {
            "inf".serialize(s)
        } else {
            "-inf".serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!(
                    "expected a float or inf/-inf/nan, got '{other}'"
                ))),
            },
        }
    }
}

/// The core diagnostic record for one regularized solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    /// Fitting error `||F - D A||_F^2` at the regularized solution.
    pub fitting_error: f64,
    /// Relative fitting error; at least 1 up to round-off.
    #[serde(with = "maybe_inf")]
    pub epsilon: f64,
    /// Solution energy `||D||_F^2`.
    pub alpha: f64,
    /// Spectral risk; at least 1 up to round-off, infinite when the
    /// projected norm degenerates.
    #[serde(with = "maybe_inf")]
    pub gamma: f64,
    pub lambda: f64,
    /// `lambda * ||A||_F^2`, the weight actually applied in the solve.
    pub lambda_prime: f64,
    /// `epsilon + lambda * gamma - 1` at the regularized solution; equals
    /// the normalized objective `g(D) / ||D A||_F^2` identically.
    #[serde(with = "maybe_inf")]
    pub tradeoff_value: f64,
    /// Objective-decomposition residual `|g(D) - (f + lambda' alpha)|`, with
    /// `g` evaluated in closed form from the singular values of `A` — the
    /// two routes share no intermediate results.
    pub identity_residual_abs: f64,
    /// Residual of the normalized tradeoff identity evaluated at the
    /// unregularized solution; `None` when `A` is too ill-conditioned for an
    /// unregularized solve.
    pub identity_residual_rel: Option<f64>,
    /// The same identity evaluated at the regularized solution.
    pub identity_residual_rel_regularized: f64,
}

/// Computes the risk diagnostics of the ridge solution for `(F, A, lambda)`.
///
/// `a` is the `r x n` design matrix and `f` the `K x n` target. The
/// effective weight is `lambda * ||A||_F^2`.
pub fn risk_report(f: &Array2<f64>, a: &Array2<f64>, lambda: f64) -> Result<RiskReport> {
    ensure_matrix("target matrix", f.view())?;
    ensure_matrix("design matrix", a.view())?;
    if f.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} columns but design has {}",
            f.ncols(),
            a.ncols()
        )));
    }
    if lambda < 0.0 || lambda.is_nan() {
        return Err(Error::NegativeRegularization(lambda));
    }
    if f.dot(&a.t()).iter().all(|&v| v == 0.0) {
        return Err(Error::OrthogonalTarget);
    }

    let a_norm_sq = sq_norm(a);
    let lambda_prime = lambda * a_norm_sq;
    let d = ridge_solve(a, f, lambda_prime)?;
    let quantities = solution_quantities(f, a, &d, a_norm_sq);
    let (fitting_error, epsilon, alpha, gamma) = quantities;

    // Route two for the objective: g(D*) = ||F||^2 - sum_i a_i^2 s_i^2 / (s_i^2 + lambda')
    // from the spectrum of A, sharing nothing with the solver above.
    let svd = thin_svd(a)?;
    let proj = target_projections(f, &svd.vt);
    let g_spectral = sq_norm(f)
        - proj
            .iter()
            .zip(svd.sigma.iter())
            .map(|(&a2, &s)| {
                let denom = s * s + lambda_prime;
                if denom > 0.0 {
                    a2 * s * s / denom
                } else {
                    0.0
                }
            })
            .sum::<f64>();
    let g_direct = fitting_error + lambda_prime * alpha;
    let identity_residual_abs = (g_direct - g_spectral).abs();

    // Normalized tradeoff identity at the regularized solution.
    let da_sq = sq_norm(&d.dot(a));
    let tradeoff_value = epsilon + lambda * gamma - 1.0;
    let identity_residual_rel_regularized = if da_sq < MIN_PROJECTED_NORM {
        f64::INFINITY
    } else {
        (g_direct / da_sq - tradeoff_value).abs()
    };

    // The same identity at the unregularized solution, when one exists.
    let identity_residual_rel = match ridge_solve(a, f, 0.0) {
        Ok(d0) => {
            let (f0, eps0, alpha0, gamma0) = solution_quantities(f, a, &d0, a_norm_sq);
            let da0 = sq_norm(&d0.dot(a));
            if da0 < MIN_PROJECTED_NORM {
                None
            } else {
                let g_at_d0 = f0 + lambda_prime * alpha0;
                Some((g_at_d0 / da0 - (eps0 + lambda * gamma0 - 1.0)).abs())
            }
        }
        Err(Error::SingularSystem { .. }) => None,
        Err(e) => return Err(e),
    };

    Ok(RiskReport {
        fitting_error,
        epsilon,
        alpha,
        gamma,
        lambda,
        lambda_prime,
        tradeoff_value,
        identity_residual_abs,
        identity_residual_rel,
        identity_residual_rel_regularized,
    })
}

fn solution_quantities(
    f: &Array2<f64>,
    a: &Array2<f64>,
    d: &Array2<f64>,
    a_norm_sq: f64,
) -> (f64, f64, f64, f64) {
    let da = d.dot(a);
    let fitting_error = sq_norm(&(f - &da));
    let alpha = sq_norm(d);
    let da_sq = sq_norm(&da);
    if da_sq < MIN_PROJECTED_NORM {
        return (fitting_error, f64::INFINITY, alpha, f64::INFINITY);
    }
    let epsilon = fitting_error / da_sq + 1.0;
    let gamma = alpha * a_norm_sq / da_sq;
    (fitting_error, epsilon, alpha, gamma)
}

/// `a_i^2 = ||F v_i||^2`: squared projections of the target onto the right
/// singular directions (rows of `vt`).
fn target_projections(f: &Array2<f64>, vt: &Array2<f64>) -> Array1<f64> {
    let fv = f.dot(&vt.t());
    fv.axis_iter(ndarray::Axis(1))
        .map(|col| col.dot(&col))
        .collect()
}

/// Closed-form risk quantities expressed in the spectrum of the design
/// matrix; the independent route backing [`risk_report`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralBreakdown {
    /// Singular values of `A`, non-increasing.
    pub singular_values: Array1<f64>,
    /// Squared target projections `a_i^2` per singular direction.
    pub projections: Array1<f64>,
    /// Shrunk projections `a'_i^2 = a_i^2 s_i^4 / (s_i^2 + lambda')^2`.
    pub shrunk_projections: Array1<f64>,
    /// `a'_i^2` normalized to sum 1.
    pub normalized_projections: Array1<f64>,
    /// `s_i^2` normalized to sum 1.
    pub normalized_spectrum: Array1<f64>,
    pub fitting_error: f64,
    #[serde(with = "maybe_inf")]
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(with = "maybe_inf")]
    pub gamma: f64,
    pub lambda_prime: f64,
}

/// Evaluates the spectral closed forms
///
/// ```text
/// alpha   = sum a_i^2 s_i^2 / (s_i^2 + l')^2
/// gamma   = sum (a'_i^2 / sum a'^2) / (s_i^2 / sum s^2)
/// f       = ||F||^2 - sum a_i^2 (1 - l'^2 / (s_i^2 + l')^2)
/// epsilon = (||F||^2 - sum 2 a_i^2 s_i^2 l' / (s_i^2 + l')^2) / sum a'_i^2
/// ```
///
/// Components with `s_i^2 + lambda' = 0` follow the pseudo-inverse
/// convention and contribute nothing to the solution terms.
pub fn spectral_breakdown(
    f: &Array2<f64>,
    a: &Array2<f64>,
    lambda_prime: f64,
) -> Result<SpectralBreakdown> {
    ensure_matrix("target matrix", f.view())?;
    ensure_matrix("design matrix", a.view())?;
    if f.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} columns but design has {}",
            f.ncols(),
            a.ncols()
        )));
    }
    if lambda_prime < 0.0 || lambda_prime.is_nan() {
        return Err(Error::NegativeRegularization(lambda_prime));
    }

    let svd = thin_svd(a)?;
    let projections = target_projections(f, &svd.vt);
    let m = projections.len();
    let f_norm_sq = sq_norm(f);

    let mut shrunk = Array1::zeros(m);
    let mut alpha = 0.0;
    let mut fit_drop = 0.0; // sum a_i^2 (1 - l'^2/(s^2+l')^2)
    let mut eps_num_drop = 0.0; // sum 2 a_i^2 s_i^2 l' / (s^2+l')^2
    for i in 0..m {
        let s2 = svd.sigma[i] * svd.sigma[i];
        let denom = s2 + lambda_prime;
        if denom > 0.0 {
            let ratio = 1.0 / (denom * denom);
            shrunk[i] = projections[i] * s2 * s2 * ratio;
            alpha += projections[i] * s2 * ratio;
            fit_drop += projections[i] * (1.0 - lambda_prime * lambda_prime * ratio);
            eps_num_drop += 2.0 * projections[i] * s2 * lambda_prime * ratio;
        }
    }
    let fitting_error = f_norm_sq - fit_drop;
    let shrunk_sum: f64 = shrunk.sum();
    let spectrum_sum: f64 = svd.sigma.iter().map(|s| s * s).sum();

    let (epsilon, gamma, normalized_projections, normalized_spectrum);
    if shrunk_sum < MIN_PROJECTED_NORM {
        epsilon = f64::INFINITY;
        gamma = f64::INFINITY;
        normalized_projections = Array1::zeros(m);
        normalized_spectrum = svd.sigma.mapv(|s| s * s / spectrum_sum);
    } else {
        epsilon = (f_norm_sq - eps_num_drop) / shrunk_sum;
        normalized_projections = shrunk.mapv(|v| v / shrunk_sum);
        normalized_spectrum = svd.sigma.mapv(|s| s * s / spectrum_sum);
        gamma = normalized_projections
            .iter()
            .zip(normalized_spectrum.iter())
            .filter(|(_, &s)| s > 0.0)
            .map(|(&p, &s)| p / s)
            .sum();
    }

    Ok(SpectralBreakdown {
        singular_values: svd.sigma,
        projections,
        shrunk_projections: shrunk,
        normalized_projections,
        normalized_spectrum,
        fitting_error,
        epsilon,
        alpha,
        gamma,
        lambda_prime,
    })
}

/// Risk bounds of the ideal (block-structured, unregularized) RBF network:
/// `(r/n) sum_k n_k / r_k <= gamma <= r`.
pub fn ideal_risk_bounds(class_counts: &[usize], basis_counts: &[usize]) -> Result<(f64, f64)> {
    if class_counts.is_empty() || class_counts.len() != basis_counts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} class counts vs {} basis counts",
            class_counts.len(),
            basis_counts.len()
        )));
    }
    let mut n = 0usize;
    let mut r = 0usize;
    let mut ratio_sum = 0.0f64;
    for (k, (&nk, &rk)) in class_counts.iter().zip(basis_counts).enumerate() {
        if nk == 0 || rk == 0 {
            return Err(Error::EmptyClass(k + 1));
        }
        n += nk;
        r += rk;
        ratio_sum += nk as f64 / rk as f64;
    }
    let lower = (r as f64 / n as f64) * ratio_sum;
    Ok((lower, r as f64))
}

/// Ideal-case risk of LRC along with its data-geometry bounds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LrcIdealRisk {
    /// `gamma = 1 + zeta_bar / beta` with `zeta_bar = ||A||_F^2 / n`.
    pub gamma: f64,
    /// `1 + 1 / (zeta_rho |cos theta_u|)`.
    pub lower: f64,
    /// `1 + zeta_rho / |cos theta_u|`.
    pub upper: f64,
    /// Augmentation shift of the underlying similarity.
    pub beta: f64,
    /// Mean squared sample length.
    pub zeta_bar: f64,
    /// Largest-to-smallest squared sample length ratio.
    pub zeta_rho: f64,
    /// Cosine of the maximum included angle between samples.
    pub cos_theta_u: f64,
}

/// Closed-form LRC risk for data satisfying the ideal condition of the
/// linear-augmented similarity graph (every cross-class entry zero).
pub fn lrc_ideal_risk(a: &Array2<f64>, labels: &[usize]) -> Result<LrcIdealRisk> {
    let (sim, beta) = crate::graph::linear_augmented_similarity(a)?;
    let check = check_ideal_condition(&sim.w, labels, labels, default_ideal_tol(&sim.w))?;
    if !check.satisfied {
        return Err(Error::IdealConditionViolated {
            max_violation: check.max_violation,
            tolerance: check.tolerance,
        });
    }

    let n = a.ncols();
    let zeta: Vec<f64> = a.axis_iter(ndarray::Axis(1)).map(|c| c.dot(&c)).collect();
    if let Some(j) = zeta.iter().position(|&z| z == 0.0) {
        return Err(Error::ZeroVector(j));
    }
    let zeta_bar = zeta.iter().sum::<f64>() / n as f64;
    let zeta_rho = zeta.iter().cloned().fold(f64::MIN, f64::max)
        / zeta.iter().cloned().fold(f64::MAX, f64::min);

    let mut min_cos = f64::MAX;
    for i in 0..n {
        for j in (i + 1)..n {
            let cos = a.column(i).dot(&a.column(j)) / (zeta[i] * zeta[j]).sqrt();
            min_cos = min_cos.min(cos);
        }
    }
    let cos_theta_u = min_cos.abs();

    Ok(LrcIdealRisk {
        gamma: 1.0 + zeta_bar / beta,
        lower: 1.0 + 1.0 / (zeta_rho * cos_theta_u),
        upper: 1.0 + zeta_rho / cos_theta_u,
        beta,
        zeta_bar,
        zeta_rho,
        cos_theta_u,
    })
}

/// Ideal-bound and perturbation-bound assessment of a trained nRBFN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NrbfnRiskReport {
    pub risk: RiskReport,
    /// Block structure of the model's design matrix.
    pub ideal: IdealCheck,
    /// Ideal-case risk bounds from the class and basis counts.
    pub gamma_lower: f64,
    pub gamma_upper: f64,
    /// Whether measured gamma falls inside the ideal bounds (small slack).
    pub gamma_within_ideal_bounds: bool,
    /// `gamma - lower` and `upper - gamma`; negative slack shows which side
    /// failed and by how much.
    pub gamma_lower_slack: f64,
    pub gamma_upper_slack: f64,
    /// Perturbation assessment against the idealized design matrix; `None`
    /// when idealization or the unregularized solves are impossible.
    pub perturbation: Option<PerturbationAssessment>,
}

/// Measured noisy-case quantities against their theoretical bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationAssessment {
    pub stats: PerturbationStats,
    /// Relative fitting error of the unregularized solve on the noisy kernel.
    pub epsilon_noisy: f64,
    /// Spectral risk of the unregularized solve on the noisy kernel.
    pub gamma_noisy: f64,
    /// Spectral risk of the unregularized solve on the idealized kernel.
    pub gamma_ideal: f64,
    pub epsilon_bound_satisfied: Option<bool>,
    /// `bound - epsilon_noisy` when the premise holds.
    pub epsilon_bound_slack: Option<f64>,
    pub gamma_bound_satisfied: Option<bool>,
    /// `gamma_ideal * factor - gamma_noisy` when the premise holds.
    pub gamma_bound_slack: Option<f64>,
}

/// Full diagnostic pass over a trained nRBFN: risk report of the training
/// solve, ideal-condition check, ideal bounds of the risk, and — when the
/// structure permits — the perturbation bounds against the idealized kernel.
///
/// `f` is the training indicator and `wt` the model's design matrix (as
/// recomputed by [`crate::nrbfn::NrbfnModel::design_matrix`]).
pub fn nrbfn_risk_report(
    model: &crate::nrbfn::NrbfnModel,
    f: &Array2<f64>,
    wt: &NormalizedSimilarity,
) -> Result<NrbfnRiskReport> {
    let labels: Vec<usize> = crate::argmax_labels(f);
    let risk = risk_report(f, &wt.w_tilde, model.lambda)?;
    let ideal = check_ideal_condition(
        &wt.w_tilde,
        &labels,
        &model.basis_labels,
        default_ideal_tol(&wt.w_tilde),
    )?;

    let class_counts = crate::data::class_counts(&labels, model.class_count);
    let basis_counts = crate::data::class_counts(&model.basis_labels, model.class_count);
    let (gamma_lower, gamma_upper) = ideal_risk_bounds(&class_counts, &basis_counts)?;
    let slack_tol = 1e-8 * gamma_upper.max(1.0);
    let gamma_lower_slack = risk.gamma - gamma_lower;
    let gamma_upper_slack = gamma_upper - risk.gamma;
    let gamma_within_ideal_bounds =
        gamma_lower_slack >= -slack_tol && gamma_upper_slack >= -slack_tol;

    let perturbation = assess_perturbation(
        f,
        wt,
        &labels,
        &model.basis_labels,
        &class_counts,
        &basis_counts,
    );

    Ok(NrbfnRiskReport {
        risk,
        ideal,
        gamma_lower,
        gamma_upper,
        gamma_within_ideal_bounds,
        gamma_lower_slack,
        gamma_upper_slack,
        perturbation,
    })
}

fn assess_perturbation(
    f: &Array2<f64>,
    wt: &NormalizedSimilarity,
    labels: &[usize],
    basis_labels: &[usize],
    class_counts: &[usize],
    basis_counts: &[usize],
) -> Option<PerturbationAssessment> {
    let (ideal, dw) = idealize(wt, labels, basis_labels).ok()?;
    let stats = perturbation_stats(&ideal, &dw, class_counts, basis_counts).ok()?;
    let noisy = risk_report(f, &wt.w_tilde, 0.0).ok()?;
    let ideal_risk = risk_report(f, &ideal.w_tilde, 0.0).ok()?;

    let (eps_ok, eps_slack, gamma_ok, gamma_slack) =
        match (stats.error_bound, stats.risk_bound_factor) {
            (Some(bound), Some(factor)) => {
                let gamma_bound = ideal_risk.gamma * factor;
                (
                    Some(noisy.epsilon <= bound),
                    Some(bound - noisy.epsilon),
                    Some(noisy.gamma <= gamma_bound),
                    Some(gamma_bound - noisy.gamma),
                )
            }
            _ => (None, None, None, None),
        };

    Some(PerturbationAssessment {
        stats,
        epsilon_noisy: noisy.epsilon,
        gamma_noisy: noisy.gamma,
        gamma_ideal: ideal_risk.gamma,
        epsilon_bound_satisfied: eps_ok,
        epsilon_bound_slack: eps_slack,
        gamma_bound_satisfied: gamma_ok,
        gamma_bound_slack: gamma_slack,
    })
}

/// One evaluation point of the regularization-path check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MonotonicityPoint {
    pub lambda_prime: f64,
    pub fitting_error: f64,
    #[serde(with = "maybe_inf")]
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(with = "maybe_inf")]
    pub gamma: f64,
    /// Strict monotonicity relative to the unregularized baseline:
    /// `f` and `epsilon` must grow, `alpha` must shrink.
    pub f_increased: bool,
    pub epsilon_increased: bool,
    pub alpha_decreased: bool,
    /// Strict decrease for non-uniform spectra; equality within `1e-10`
    /// relative for uniform ones.
    pub gamma_ok: bool,
}

/// Behaviour of the four risk quantities along a regularization path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Quantities at `lambda' = 0`.
    pub baseline: MonotonicityPoint,
    pub points: Vec<MonotonicityPoint>,
    /// Whether the singular values seen by the target are all equal, the
    /// degenerate case where gamma stays constant instead of decreasing.
    pub spectrum_uniform: bool,
    pub all_hold: bool,
}

/// Verifies that positive regularization strictly increases `f` and
/// `epsilon` and strictly decreases `alpha`, and that `gamma` strictly
/// decreases exactly when the spectrum seen by the target is non-uniform.
///
/// Every `lambda_prime` in the grid must be positive; quantities are
/// evaluated through the spectral closed forms.
pub fn regularization_monotonicity_check(
    f: &Array2<f64>,
    a: &Array2<f64>,
    lambda_primes: &[f64],
) -> Result<MonotonicityReport> {
    if lambda_primes.is_empty() {
        return Err(Error::Empty("regularization grid"));
    }
    if let Some(&bad) = lambda_primes.iter().find(|&&l| l <= 0.0 || l.is_nan()) {
        return Err(Error::NegativeRegularization(bad));
    }

    let base = spectral_breakdown(f, a, 0.0)?;
    let baseline = MonotonicityPoint {
        lambda_prime: 0.0,
        fitting_error: base.fitting_error,
        epsilon: base.epsilon,
        alpha: base.alpha,
        gamma: base.gamma,
        f_increased: true,
        epsilon_increased: true,
        alpha_decreased: true,
        gamma_ok: true,
    };

    // The relevant spectrum: directions the target actually projects onto.
    let max_proj = base.projections.iter().cloned().fold(0.0f64, f64::max);
    let seen: Vec<f64> = base
        .singular_values
        .iter()
        .zip(base.projections.iter())
        .filter(|(&s, &p)| s > 0.0 && p > 1e-12 * max_proj)
        .map(|(&s, _)| s)
        .collect();
    let spectrum_uniform = match seen.as_slice() {
        [] | [_] => true,
        all => {
            let max = all.iter().cloned().fold(f64::MIN, f64::max);
            let min = all.iter().cloned().fold(f64::MAX, f64::min);
            (max - min) <= 1e-9 * max
        }
    };

    let mut points = Vec::with_capacity(lambda_primes.len());
    let mut all_hold = true;
    for &lp in lambda_primes {
        let b = spectral_breakdown(f, a, lp)?;
        let gamma_ok = if spectrum_uniform {
            (b.gamma - base.gamma).abs() <= 1e-10 * base.gamma.max(1.0)
        } else {
            b.gamma < base.gamma
        };
        let point = MonotonicityPoint {
            lambda_prime: lp,
            fitting_error: b.fitting_error,
            epsilon: b.epsilon,
            alpha: b.alpha,
            gamma: b.gamma,
            f_increased: b.fitting_error > base.fitting_error,
            epsilon_increased: b.epsilon > base.epsilon,
            alpha_decreased: b.alpha < base.alpha,
            gamma_ok,
        };
        all_hold &=
            point.f_increased && point.epsilon_increased && point.alpha_decreased && point.gamma_ok;
        points.push(point);
    }

    Ok(MonotonicityReport {
        baseline,
        points,
        spectrum_uniform,
        all_hold,
    })
}

/// Per-class subspace gap of an ideal design matrix.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassGap {
    pub class: usize,
    pub n_k: usize,
    pub r_k: usize,
    /// Largest squared singular value of the class block.
    pub sigma1_sq: f64,
    /// `sigma1^2 - n_k / r_k`; zero exactly when the block row sums are even.
    pub psi: f64,
    /// Largest row sum of the block; `psi <= z_max - n_k / r_k`.
    pub z_max: f64,
}

/// Subspace-gap breakdown of an exactly ideal column-stochastic matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub classes: Vec<ClassGap>,
}

/// Computes, per class, how far the top singular direction of its block sits
/// from the flat profile that even row sums would give (`psi = 0`).
///
/// Requires the ideal condition to hold within `1e-12` (absolute, entries
/// are at most one).
pub fn subspace_gap(
    wt: &NormalizedSimilarity,
    labels: &[usize],
    basis_labels: &[usize],
) -> Result<GapReport> {
    let w = &wt.w_tilde;
    let check = check_ideal_condition(w, labels, basis_labels, 1e-12)?;
    if !check.satisfied {
        return Err(Error::IdealConditionViolated {
            max_violation: check.max_violation,
            tolerance: check.tolerance,
        });
    }
    let class_count = labels
        .iter()
        .chain(basis_labels)
        .copied()
        .max()
        .unwrap_or(0);
    let mut classes = Vec::new();
    for class in 1..=class_count {
        let cols: Vec<usize> = (0..labels.len()).filter(|&j| labels[j] == class).collect();
        let rows: Vec<usize> = (0..basis_labels.len())
            .filter(|&i| basis_labels[i] == class)
            .collect();
        if cols.is_empty() || rows.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        let block = w
            .select(ndarray::Axis(0), &rows)
            .select(ndarray::Axis(1), &cols);
        let svd = thin_svd(&block)?;
        let sigma1_sq = svd.sigma[0] * svd.sigma[0];
        let n_k = cols.len();
        let r_k = rows.len();
        let z_max = block
            .sum_axis(ndarray::Axis(1))
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        classes.push(ClassGap {
            class,
            n_k,
            r_k,
            sigma1_sq,
            psi: sigma1_sq - n_k as f64 / r_k as f64,
            z_max,
        });
    }
    Ok(GapReport { classes })
}
