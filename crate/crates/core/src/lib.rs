//! Spectral-graph classification with built-in error and risk diagnostics.
//!
//! Two closed-form classifiers share one computational core:
//!
//! * [`lrc`] — linear regression for classification on an augmented data
//!   matrix, with ridge regularization;
//! * [`nrbfn`] — a normalized RBF network whose basis is selected by a
//!   soft-KNN confidence rule.
//!
//! Both train by solving one regularized least-squares system against a class
//! indicator target. The [`diagnostics`] module measures the quantities that
//! govern how such solutions generalize — fitting error, solution energy, and
//! two scale-invariant risk ratios — and verifies the identities and bounds
//! that connect them, along two independent computational routes.
//!
//! Matrices are `ndarray::Array2<f64>` throughout, oriented one sample per
//! column. Class labels are `usize` in `1..=K`.
//!
//! Linear algebra is LAPACK-backed via `ndarray-linalg`; runs are
//! deterministic for a fixed input, seed, and BLAS thread count (set
//! `OPENBLAS_NUM_THREADS=1` for strictly reproducible timings).

pub mod data;
pub mod diagnostics;
mod error;
pub mod graph;
pub mod lrc;
pub mod nrbfn;
pub mod numerics;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};

/// Class decisions together with the score matrix (`K x m`, one column per
/// sample) that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Predicted labels in `1..=K`; score ties resolve to the smaller class.
    pub labels: Vec<usize>,
    pub scores: ndarray::Array2<f64>,
}

pub(crate) fn argmax_labels(scores: &ndarray::Array2<f64>) -> Vec<usize> {
    scores
        .axis_iter(ndarray::Axis(1))
        .map(|col| {
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (c, &s) in col.iter().enumerate() {
                if s > best_score {
                    best = c;
                    best_score = s;
                }
            }
            best + 1
        })
        .collect()
}
