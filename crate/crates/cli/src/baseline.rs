//! K-nearest-neighbour majority vote, the reference baseline.

use anyhow::{bail, Result};
use ndarray::Array2;
use nrbfn::numerics::pairwise_sq_dists;

/// Predicts labels for the columns of `test` by majority vote over the `k`
/// nearest training samples (ties on distance broken by lower training
/// index, ties on votes by smaller class label).
pub fn knn_predict(
    train: &Array2<f64>,
    labels: &[usize],
    class_count: usize,
    test: &Array2<f64>,
    k: usize,
) -> Result<Vec<usize>> {
    let n_train = train.ncols();
    if labels.len() != n_train {
        bail!("{} labels for {} training samples", labels.len(), n_train);
    }
    if k == 0 || k > n_train {
        bail!("k = {k} outside 1..={n_train}");
    }
    let d = pairwise_sq_dists(train, test)?;
    let mut predictions = Vec::with_capacity(test.ncols());
    let mut order: Vec<usize> = Vec::with_capacity(n_train);
    for col in d.columns() {
        order.clear();
        order.extend(0..n_train);
        order.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let mut votes = vec![0usize; class_count];
        for &idx in &order[..k] {
            votes[labels[idx] - 1] += 1;
        }
        let best = votes
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
            .map(|(i, _)| i + 1)
            .expect("at least one class");
        predictions.push(best);
    }
    Ok(predictions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn votes_follow_the_neighbourhood() {
        let train = array![[0.0, 0.1, 0.2, 5.0, 5.1, 5.2]];
        let labels = vec![1, 1, 1, 2, 2, 2];
        let test = array![[0.05, 5.05]];
        let got = knn_predict(&train, &labels, 2, &test, 3).unwrap();
        assert_eq!(got, vec![1, 2]);
    }

    #[test]
    fn vote_ties_resolve_to_the_smaller_class() {
        let train = array![[0.0, 1.0]];
        let labels = vec![2, 1];
        let test = array![[0.5]];
        // One vote each: class 1 wins the tie.
        let got = knn_predict(&train, &labels, 2, &test, 2).unwrap();
        assert_eq!(got, vec![1]);
    }

    #[test]
    fn invalid_k_is_rejected() {
        let train = array![[0.0, 1.0]];
        assert!(knn_predict(&train, &[1, 2], 2, &train, 0).is_err());
        assert!(knn_predict(&train, &[1, 2], 2, &train, 3).is_err());
    }
}
