//! Stratified cross-validation folds with deterministic seeding.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Assigns sample indices to stratified folds.
///
/// Every fold receives samples of each class in proportion (round-robin
/// after a seeded per-class shuffle). When the smallest class has fewer
/// samples than `folds`, the fold count is reduced to keep every class
/// represented in every training complement; classes with fewer than two
/// samples cannot be cross-validated at all.
pub fn stratified_folds(
    labels: &[usize],
    class_count: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        bail!("cross-validation needs at least 2 folds, got {folds}");
    }
    let counts = nrbfn::data::class_counts(labels, class_count);
    if let Some((k, &c)) = counts.iter().enumerate().find(|(_, &c)| c < 2) {
        bail!(
            "class {} has {c} sample(s); cross-validation needs at least 2",
            k + 1
        );
    }
    let effective = folds.min(*counts.iter().min().expect("classes exist"));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![Vec::new(); effective];
    for class in 1..=class_count {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&j| labels[j] == class).collect();
        for j in (1..members.len()).rev() {
            let i = rng.random_range(0..=j);
            members.swap(i, j);
        }
        for (offset, idx) in members.into_iter().enumerate() {
            assignment[offset % effective].push(idx);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}
