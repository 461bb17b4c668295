//! Deterministic random generators shared by unit, property, and
//! acceptance tests. Not part of the stable API.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{column_normalize, NormalizedSimilarity};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn f64_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn usize_in(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

/// Dense matrix with entries uniform in [-1, 1).
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Random indicator matrix: K x n with exactly one unit entry per column and
/// every class hit at least once (requires `n >= classes`).
pub fn random_indicator(rng: &mut ChaCha8Rng, classes: usize, n: usize) -> Array2<f64> {
    assert!(n >= classes);
    let labels = random_labels(rng, classes, n);
    let mut f = Array2::zeros((classes, n));
    for (j, &c) in labels.iter().enumerate() {
        f[[c - 1, j]] = 1.0;
    }
    f
}

/// Labels in 1..=classes covering every class (requires `n >= classes`).
pub fn random_labels(rng: &mut ChaCha8Rng, classes: usize, n: usize) -> Vec<usize> {
    assert!(n >= classes);
    let mut labels: Vec<usize> = (0..n)
        .map(|j| {
            if j < classes {
                j + 1
            } else {
                rng.random_range(1..=classes)
            }
        })
        .collect();
    // Shuffle so class coverage is not positional.
    for j in (1..n).rev() {
        let i = rng.random_range(0..=j);
        labels.swap(i, j);
    }
    labels
}

/// An ideal (block-structured) column-stochastic design matrix together with
/// its indicator target and label bookkeeping.
#[derive(Debug, Clone)]
pub struct IdealInstance {
    pub wt: NormalizedSimilarity,
    /// Indicator target, `classes x n`.
    pub f: Array2<f64>,
    pub labels: Vec<usize>,
    pub basis_labels: Vec<usize>,
    pub class_counts: Vec<usize>,
    pub basis_counts: Vec<usize>,
}

impl IdealInstance {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn r(&self) -> usize {
        self.basis_labels.len()
    }
}

/// How the within-class blocks of an [`IdealInstance`] are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockFill {
    /// Positive entries uniform in [0.1, 1) before normalization.
    Dense,
    /// Exactly one unit entry per column; every basis row is hit.
    OneHot,
}

/// Random ideal block matrix: up to 5 classes, `r_k <= n_k` basis rows per
/// class (at least one), dense blocks generically full row rank.
pub fn random_ideal_blocks(
    rng: &mut ChaCha8Rng,
    max_classes: usize,
    max_basis_per_class: usize,
    max_samples_per_class: usize,
    fill: BlockFill,
) -> IdealInstance {
    let classes = usize_in(rng, 2, max_classes);
    let mut basis_counts = Vec::with_capacity(classes);
    let mut class_counts = Vec::with_capacity(classes);
    for _ in 0..classes {
        let r_k = usize_in(rng, 1, max_basis_per_class);
        let n_k = usize_in(rng, r_k.max(2), max_samples_per_class.max(r_k + 1));
        basis_counts.push(r_k);
        class_counts.push(n_k);
    }
    ideal_blocks_from_counts(rng, &class_counts, &basis_counts, fill)
}

/// Deterministically shaped ideal blocks with the given per-class counts.
pub fn ideal_blocks_from_counts(
    rng: &mut ChaCha8Rng,
    class_counts: &[usize],
    basis_counts: &[usize],
    fill: BlockFill,
) -> IdealInstance {
    assert_eq!(class_counts.len(), basis_counts.len());
    let classes = class_counts.len();
    let n: usize = class_counts.iter().sum();
    let r: usize = basis_counts.iter().sum();
    let mut w = Array2::zeros((r, n));
    let mut labels = Vec::with_capacity(n);
    let mut basis_labels = Vec::with_capacity(r);
    let mut row0 = 0;
    let mut col0 = 0;
    for k in 0..classes {
        let (r_k, n_k) = (basis_counts[k], class_counts[k]);
        basis_labels.extend(std::iter::repeat(k + 1).take(r_k));
        labels.extend(std::iter::repeat(k + 1).take(n_k));
        for j in 0..n_k {
            match fill {
                BlockFill::Dense => {
                    for i in 0..r_k {
                        w[[row0 + i, col0 + j]] = f64_in(rng, 0.1, 1.0);
                    }
                }
                BlockFill::OneHot => {
                    // Cycle through rows first so each one is covered.
                    let i = if j < r_k {
                        j
                    } else {
                        usize_in(rng, 0, r_k - 1)
                    };
                    w[[row0 + i, col0 + j]] = 1.0;
                }
            }
        }
        row0 += r_k;
        col0 += n_k;
    }
    let wt = column_normalize(&w).expect("generated blocks have positive column sums");
    let f = indicator_from_labels(&labels, classes);
    IdealInstance {
        wt,
        f,
        labels,
        basis_labels,
        class_counts: class_counts.to_vec(),
        basis_counts: basis_counts.to_vec(),
    }
}

/// Adds uniform cross-class noise in `[0, noise)` to an ideal instance and
/// renormalizes, so the result is a noisy but still column-stochastic design.
pub fn perturb_ideal_blocks(
    rng: &mut ChaCha8Rng,
    instance: &IdealInstance,
    noise: f64,
) -> IdealInstance {
    let mut w = instance.wt.w_tilde.clone();
    for j in 0..instance.n() {
        for i in 0..instance.r() {
            if instance.basis_labels[i] != instance.labels[j] {
                w[[i, j]] += f64_in(rng, 0.0, noise);
            }
        }
    }
    let wt = column_normalize(&w).expect("noisy blocks keep positive column sums");
    IdealInstance {
        wt,
        ..instance.clone()
    }
}

/// Indicator matrix of the given labels (1-based, `classes` rows).
pub fn indicator_from_labels(labels: &[usize], classes: usize) -> Array2<f64> {
    let mut f = Array2::zeros((classes, labels.len()));
    for (j, &c) in labels.iter().enumerate() {
        f[[c - 1, j]] = 1.0;
    }
    f
}

/// Column-stochastic block with even row sums: `m` horizontal copies of a
/// circulant built from a random positive profile, so every row sums to
/// exactly `n / r` while the entries stay generic.
pub fn even_row_sum_block(rng: &mut ChaCha8Rng, r: usize, m: usize) -> Array2<f64> {
    let mut v: Vec<f64> = (0..r).map(|_| f64_in(rng, 0.1, 1.0)).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    Array2::from_shape_fn((r, m * r), |(i, j)| v[(i + r - j % r) % r])
}

/// Random dense column-stochastic matrix.
pub fn random_column_stochastic(rng: &mut ChaCha8Rng, r: usize, n: usize) -> Array2<f64> {
    let mut w = Array2::from_shape_fn((r, n), |_| f64_in(rng, 0.05, 1.0));
    for mut col in w.columns_mut() {
        let s = col.sum();
        col.mapv_inplace(|v| v / s);
    }
    w
}

/// Data matrix and labels satisfying the ideal condition of the
/// linear-augmented graph with shift exactly 1.
///
/// Class means are simplex vertices of squared norm `K - 1` (pairwise inner
/// product -1), and each class spreads along its own private coordinates in
/// antipodal pairs of magnitude `spreads[k]` (requires `spreads[k]^2 < K` so
/// the cross-class entries stay the graph minimum). Columns are mean free;
/// with equal spreads the risk bounds collapse onto the risk itself.
pub fn ideal_lrc_data(
    classes: usize,
    pairs_per_class: usize,
    spreads: &[f64],
) -> (Array2<f64>, Vec<usize>) {
    assert!(
        (2..=3).contains(&classes),
        "means are planar simplex vertices"
    );
    assert_eq!(spreads.len(), classes);
    for &t in spreads {
        assert!(t > 0.0 && t * t < classes as f64);
    }
    let mean_dims = classes - 1;
    let n_k = 2 * pairs_per_class;
    let n = classes * n_k;
    let dims = mean_dims + classes * pairs_per_class;
    let mut a = Array2::zeros((dims, n));
    let mut labels = Vec::with_capacity(n);

    // Simplex vertices with |m|^2 = c and m_i . m_j = -1: for K = 2 the
    // points +-1; for K = 3 three planar vectors of norm sqrt(2) at 120
    // degrees.
    let means: Vec<Vec<f64>> = match classes {
        2 => vec![vec![1.0], vec![-1.0]],
        _ => {
            let s = 2.0f64.sqrt();
            (0..3)
                .map(|k| {
                    let angle = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                    vec![s * angle.cos(), s * angle.sin()]
                })
                .collect()
        }
    };

    let mut j = 0;
    for (k, mean) in means.iter().enumerate() {
        for p in 0..pairs_per_class {
            let axis = mean_dims + k * pairs_per_class + p;
            for sign in [1.0, -1.0] {
                for (i, &m) in mean.iter().enumerate() {
                    a[[i, j]] = m;
                }
                a[[axis, j]] = sign * spreads[k];
                labels.push(k + 1);
                j += 1;
            }
        }
    }
    (a, labels)
}
