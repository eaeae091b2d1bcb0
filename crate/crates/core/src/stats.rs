//! Chance-corrected agreement between labelings and a label-permutation null.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::{par, rng, Error, Result};

/// Maps arbitrary labels to dense ids in sorted label order.
pub fn encode_labels<S: AsRef<str>>(labels: &[S]) -> Vec<usize> {
    let ids: BTreeMap<&str, usize> = {
        let mut keys: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    };
    labels.iter().map(|l| ids[l.as_ref()]).collect()
}

/// `table[i][j]` counts items labeled `i` in `a` and `j` in `b`.
pub fn contingency(a: &[usize], b: &[usize]) -> Vec<Vec<u64>> {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let ra = a.iter().max().map_or(0, |m| m + 1);
    let rb = b.iter().max().map_or(0, |m| m + 1);
    let mut t = vec![vec![0u64; rb]; ra];
    for (&x, &y) in a.iter().zip(b) {
        t[x][y] += 1;
    }
    t
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index. Two single-cluster labelings score 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let t = contingency(a, b);
    let index: f64 = t.iter().flatten().map(|&n| pairs(n)).sum();
    let rows: f64 = t.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..t.first().map_or(0, Vec::len))
        .map(|j| pairs(t.iter().map(|r| r[j]).sum()))
        .sum();
    let total = pairs(a.len() as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationResult {
    pub observed: f64,
    /// `(1 + #{null ≥ observed}) / (draws + 1)`.
    pub p_value: f64,
    /// Nearest-rank 99th percentile of the null.
    pub null_q99: f64,
    pub draws: usize,
}

/// Permutes `b` against fixed `a` `draws` times. Draw `i` shuffles with a
/// generator seeded from `(seed, i)`, so the result does not depend on the
/// thread count.
pub fn permutation_test<F>(a: &[usize], b: &[usize], draws: usize, seed: u64, statistic: F) -> Result<PermutationResult>
where
    F: Fn(&[usize], &[usize]) -> f64 + Send + Sync,
{
    if a.len() != b.len() {
        return Err(Error::arg(format!("labelings differ in length ({} vs {})", a.len(), b.len())));
    }
    if draws == 0 {
        return Err(Error::arg("draws must be at least 1"));
    }
    let observed = statistic(a, b);
    let mut null = par::map_indices(draws, |i| {
        let mut r = rng::seeded(rng::derive_indexed(seed, i as u64));
        let mut shuffled = b.to_vec();
        shuffled.shuffle(&mut r);
        statistic(a, &shuffled)
    });
    let exceed = null.iter().filter(|&&x| x >= observed).count();
    null.sort_by(f64::total_cmp);
    let rank = ((0.99 * draws as f64).ceil() as usize).clamp(1, draws);
    Ok(PermutationResult {
        observed,
        p_value: (1 + exceed) as f64 / (draws + 1) as f64,
        null_q99: null[rank - 1],
        draws,
    })
}
