//! Exact structural guarantees on constructed ideal (block-structured)
//! designs: indicator recovery, risk bounds and their attainment, LRC
//! ideal-case geometry, perturbation bounds, and per-class subspace gaps.

use approx::assert_abs_diff_eq;
use ndarray::s;
use nrbfn::diagnostics::{
    ideal_risk_bounds, lrc_ideal_risk, nrbfn_risk_report, risk_report, subspace_gap,
};
use nrbfn::graph::{column_normalize, idealize, perturbation_stats};
use nrbfn::numerics::{ridge_solve, thin_svd};
use nrbfn::testutil::{self, BlockFill};

fn sq_norm(m: &ndarray::Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Caps matching the smallest documented scale: K <= 5 classes, r <= 12
/// basis rows, n <= 60 samples in total.
fn desk_scale_instance(
    rng: &mut rand_chacha::ChaCha8Rng,
    fill: BlockFill,
) -> testutil::IdealInstance {
    let classes = testutil::usize_in(rng, 2, 5);
    let inst = testutil::random_ideal_blocks(rng, classes, 12 / classes, 60 / classes, fill);
    assert!(inst.r() <= 12 && inst.n() <= 60);
    inst
}

#[test]
fn ideal_blocks_recover_the_indicator_exactly() {
    let mut rng = testutil::rng(3001);
    for trial in 0..100 {
        let fill = if trial % 2 == 0 {
            BlockFill::Dense
        } else {
            BlockFill::OneHot
        };
        let inst = desk_scale_instance(&mut rng, fill);
        let x = ridge_solve(&inst.wt.w_tilde, &inst.f, 0.0).unwrap();

        // The solution is exactly the one-hot indicator of the basis labels.
        for (i, &label) in inst.basis_labels.iter().enumerate() {
            for k in 0..inst.class_counts.len() {
                let want = if k + 1 == label { 1.0 } else { 0.0 };
                assert!(
                    (x[[k, i]] - want).abs() <= 1e-8,
                    "trial {trial}: X[{k},{i}] = {} (basis label {label})",
                    x[[k, i]]
                );
            }
        }
        // And it reproduces the target: F = X W~.
        let resid = (&inst.f - &x.dot(&inst.wt.w_tilde))
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(resid <= 1e-8, "trial {trial}: recovery residual {resid}");
    }
}

#[test]
fn ideal_risk_lands_inside_its_bounds() {
    let mut rng = testutil::rng(3003);
    for trial in 0..100 {
        let inst = desk_scale_instance(&mut rng, BlockFill::Dense);
        let report = risk_report(&inst.f, &inst.wt.w_tilde, 0.0).unwrap();
        let (lower, upper) = ideal_risk_bounds(&inst.class_counts, &inst.basis_counts).unwrap();
        let slack = 1e-8 * upper;
        assert!(
            report.gamma >= lower - slack && report.gamma <= upper + slack,
            "trial {trial}: gamma {} outside [{lower}, {upper}]",
            report.gamma
        );
        assert_abs_diff_eq!(report.epsilon, 1.0, epsilon = 1e-8);
    }
}

#[test]
fn one_hot_columns_attain_the_upper_bound() {
    let mut rng = testutil::rng(3005);
    for _ in 0..25 {
        let inst = desk_scale_instance(&mut rng, BlockFill::OneHot);
        let report = risk_report(&inst.f, &inst.wt.w_tilde, 0.0).unwrap();
        let r = inst.r() as f64;
        assert_abs_diff_eq!(report.gamma, r, epsilon = 1e-8 * r);
    }
}

#[test]
fn single_basis_rows_attain_the_lower_bound() {
    let mut rng = testutil::rng(3007);
    for _ in 0..25 {
        let classes = testutil::usize_in(&mut rng, 2, 5);
        let counts: Vec<usize> = (0..classes)
            .map(|_| 2 * testutil::usize_in(&mut rng, 1, 6))
            .collect();
        let ones = vec![1; classes];
        let inst = testutil::ideal_blocks_from_counts(&mut rng, &counts, &ones, BlockFill::Dense);
        let report = risk_report(&inst.f, &inst.wt.w_tilde, 0.0).unwrap();
        let (lower, _) = ideal_risk_bounds(&counts, &ones).unwrap();
        // One basis row per class forces uniform unit entries, the minimizer.
        assert_abs_diff_eq!(report.gamma, lower, epsilon = 1e-8 * lower);
        assert_abs_diff_eq!(lower, classes as f64, epsilon = 1e-12);
    }
}

#[test]
fn full_nrbfn_report_agrees_with_direct_bounds() {
    let ds = nrbfn::data::synthetic_blobs(3, &[14, 14, 14], 6.0, 91).unwrap();
    let params = nrbfn::nrbfn::NrbfnParams {
        lambda: 1e-13,
        k: 5,
        t: 0.9,
    };
    let model = nrbfn::nrbfn::nrbfn_train(&ds.features, &ds.labels, params).unwrap();
    let wt = model.design_matrix(&ds.features).unwrap();
    let f = nrbfn::data::to_indicator(&ds.labels, ds.class_count).unwrap();
    let report = nrbfn_risk_report(&model, &f, &wt).unwrap();
    assert!(report.risk.gamma >= 1.0 - 1e-9);
    assert!(report.gamma_lower <= report.gamma_upper);
    // The Gaussian kernel never vanishes across blobs, but the cross-class
    // mass stays well below the within-class scale.
    assert!(!report.ideal.satisfied);
    assert!(report.ideal.max_violation < 0.5);
    if let Some(p) = &report.perturbation {
        assert!(p.stats.delta <= p.stats.xi + 1e-12);
    }
}

#[test]
fn lrc_ideal_family_matches_theory() {
    // Equal spreads: bounds are tight around gamma = 1 + zeta_bar.
    for (classes, pairs, t) in [(2usize, 1usize, 1.0f64), (2, 3, 0.7), (3, 2, 1.2)] {
        let spreads = vec![t; classes];
        let (a, labels) = testutil::ideal_lrc_data(classes, pairs, &spreads);
        let risk = lrc_ideal_risk(&a, &labels).unwrap();
        assert_abs_diff_eq!(risk.beta, 1.0, epsilon = 1e-12);
        let zeta = (classes - 1) as f64 + t * t;
        assert_abs_diff_eq!(risk.gamma, 1.0 + zeta, epsilon = 1e-10);
        assert_abs_diff_eq!(risk.lower, risk.gamma, epsilon = 1e-10);
        assert_abs_diff_eq!(risk.upper, risk.gamma, epsilon = 1e-10);
        verify_measured_lrc_risk(&a, &labels, classes, risk.gamma);
    }

    // Unequal spreads: gamma sits strictly between the bounds.
    let (a, labels) = testutil::ideal_lrc_data(2, 2, &[0.6, 1.1]);
    let risk = lrc_ideal_risk(&a, &labels).unwrap();
    assert!(risk.lower < risk.gamma && risk.gamma < risk.upper);
    verify_measured_lrc_risk(&a, &labels, 2, risk.gamma);
}

/// Measures gamma and the top-subspace residual of the actual unregularized
/// solve on the augmented matrix and checks them against the closed form.
fn verify_measured_lrc_risk(
    a: &ndarray::Array2<f64>,
    labels: &[usize],
    classes: usize,
    gamma_expected: f64,
) {
    let n = a.ncols();
    let mut at = ndarray::Array2::ones((a.nrows() + 1, n));
    at.slice_mut(s![1.., ..]).assign(a);
    let f = nrbfn::data::to_indicator(labels, classes).unwrap();
    let report = risk_report(&f, &at, 0.0).unwrap();
    assert_abs_diff_eq!(report.epsilon, 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(
        report.gamma,
        gamma_expected,
        epsilon = 1e-8 * gamma_expected
    );

    // F lies in the span of the top K right singular vectors of the
    // augmented matrix.
    let svd = thin_svd(&at).unwrap();
    let vk = svd.vt.slice(s![..classes, ..]);
    let coeff = f.dot(&vk.t());
    let resid = &f - &coeff.dot(&vk);
    assert!(
        (sq_norm(&resid.to_owned()) / sq_norm(&f)).sqrt() <= 1e-8,
        "indicator leaks out of the top singular subspace"
    );
    // The spectral gap separating that subspace is real.
    assert!(svd.sigma[classes - 1] > svd.sigma[classes] + 1e-9);
}

#[test]
fn perturbation_bounds_hold_on_noisy_ideal_instances() {
    let mut rng = testutil::rng(3011);
    let mut checked = 0;
    for trial in 0..50 {
        let base = desk_scale_instance(&mut rng, BlockFill::Dense);
        let noise = 10f64.powf(testutil::f64_in(&mut rng, -6.0, -4.0));
        let noisy = testutil::perturb_ideal_blocks(&mut rng, &base, noise);

        let (ideal, dw) = idealize(&noisy.wt, &noisy.labels, &noisy.basis_labels).unwrap();
        let stats =
            perturbation_stats(&ideal, &dw, &noisy.class_counts, &noisy.basis_counts).unwrap();
        assert!(
            stats.delta <= stats.xi + 1e-12,
            "trial {trial}: delta {} > xi {}",
            stats.delta,
            stats.xi
        );
        if !stats.condition_met {
            continue;
        }
        checked += 1;
        let noisy_report = risk_report(&noisy.f, &noisy.wt.w_tilde, 0.0).unwrap();
        let ideal_report = risk_report(&noisy.f, &ideal.w_tilde, 0.0).unwrap();
        let eps_bound = stats.error_bound.unwrap();
        let gamma_bound = ideal_report.gamma * stats.risk_bound_factor.unwrap();
        assert!(
            noisy_report.epsilon <= eps_bound,
            "trial {trial}: epsilon {} exceeds bound {eps_bound}",
            noisy_report.epsilon
        );
        assert!(
            noisy_report.gamma <= gamma_bound,
            "trial {trial}: gamma {} exceeds bound {gamma_bound}",
            noisy_report.gamma
        );
    }
    // The noise scales are chosen so the premise holds almost always.
    assert!(checked >= 45, "only {checked} instances met the premise");
}

#[test]
fn subspace_gap_is_zero_iff_row_sums_are_even() {
    let mut rng = testutil::rng(3013);
    for _ in 0..25 {
        let r = testutil::usize_in(&mut rng, 2, 6);
        let m = testutil::usize_in(&mut rng, 1, 5);
        let block = testutil::even_row_sum_block(&mut rng, r, m);
        let wt = column_normalize(&block).unwrap();
        let labels = vec![1; block.ncols()];
        let report = subspace_gap(&wt, &labels, &vec![1; r]).unwrap();
        assert!(
            report.classes[0].psi.abs() <= 1e-10,
            "even block has psi = {}",
            report.classes[0].psi
        );
    }

    // Uneven row sums push the top singular value strictly above n/r.
    let uneven = ndarray::array![[1.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0],];
    let wt = column_normalize(&uneven).unwrap();
    let report = subspace_gap(&wt, &[1; 4], &[1, 1]).unwrap();
    assert!(report.classes[0].psi > 1e-3);
}

#[test]
fn subspace_gap_respects_its_envelope_on_random_blocks() {
    let mut rng = testutil::rng(3017);
    for trial in 0..100 {
        let r = testutil::usize_in(&mut rng, 2, 8);
        let n = testutil::usize_in(&mut rng, r, 24);
        let block = testutil::random_column_stochastic(&mut rng, r, n);
        let wt = column_normalize(&block).unwrap();
        let report = subspace_gap(&wt, &vec![1; n], &vec![1; r]).unwrap();
        let gap = &report.classes[0];
        assert!(gap.psi >= -1e-10, "trial {trial}: psi = {}", gap.psi);
        assert!(
            gap.psi <= gap.z_max - n as f64 / r as f64 + 1e-10,
            "trial {trial}: psi {} exceeds envelope {}",
            gap.psi,
            gap.z_max - n as f64 / r as f64
        );
    }
}
