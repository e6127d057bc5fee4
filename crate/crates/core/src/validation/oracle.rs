//! Exact inclusion probabilities for successive weighted draws without
//! replacement, by enumerating every ordered draw sequence.

use crate::error::{Error, Result};

/// Largest grid the enumeration accepts (`6! = 720` orderings).
pub const MAX_ORACLE_PATCHES: usize = 6;

/// Probability that each item appears among `k` successive draws, where
/// each draw picks a remaining item with probability proportional to its
/// weight. The result sums to `k`.
pub fn inclusion_probabilities(weights: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = weights.len();
    if n > MAX_ORACLE_PATCHES {
        return Err(Error::OracleTooLarge(n));
    }
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    if k > positive {
        return Err(Error::InsufficientPositiveWeight {
            requested: k,
            available: positive,
        });
    }
    let mut marginals = vec![0.0; n];
    let mut taken = vec![false; n];
    let mut sequence = Vec::with_capacity(k);
    descend(weights, k, 1.0, &mut taken, &mut sequence, &mut marginals);
    Ok(marginals)
}

fn descend(
    weights: &[f64],
    k: usize,
    prob: f64,
    taken: &mut [bool],
    sequence: &mut Vec<usize>,
    marginals: &mut [f64],
) {
    if sequence.len() == k {
        for &i in sequence.iter() {
            marginals[i] += prob;
        }
        return;
    }
    let remaining: f64 = (0..weights.len()).filter(|&i| !taken[i]).map(|i| weights[i]).sum();
    for i in 0..weights.len() {
        if taken[i] || weights[i] <= 0.0 {
            continue;
        }
        taken[i] = true;
        sequence.push(i);
        descend(weights, k, prob * weights[i] / remaining, taken, sequence, marginals);
        sequence.pop();
        taken[i] = false;
    }
}
