//! Order-1 Wasserstein distance between arm-frequency distributions.

use alloc::vec::Vec;

/// Normalizes counts to a probability vector; `None` when they sum to zero.
pub fn pmf(counts: &[u64]) -> Option<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    (total > 0).then(|| counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// W1 distance between two distributions on `0..n` with ground metric
/// `|i - j|`, computed as the L1 distance of the CDFs.
pub fn wasserstein1(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share a support");
    let (mut cp, mut cq, mut dist) = (0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(q).take(p.len().saturating_sub(1)) {
        cp += a;
        cq += b;
        dist += (cp - cq).abs();
    }
    dist
}

/// Exploration rate for the next epoch from the two latest content-play
/// histograms. An empty histogram means nothing is known and returns 1.
pub fn adapt_epsilon(current: &[u64], previous: &[u64]) -> f64 {
    match (pmf(current), pmf(previous)) {
        (Some(p), Some(q)) => wasserstein1(&p, &q).min(1.0),
        _ => 1.0,
    }
}
