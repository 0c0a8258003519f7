//! Krippendorff's alpha with a pluggable distance.
//!
//! `matrix[u][j]` is judge `j`'s value for item `u`, `None` when missing.
//! Items with fewer than two values are not pairable and drop out.

use std::collections::{BTreeMap, BTreeSet};

use super::EvalError;

/// 0 for equal values, 1 otherwise.
pub fn nominal<V: PartialEq>(a: &V, b: &V) -> f64 {
    if a == b {
        0.0
    } else {
        1.0
    }
}

/// MASI distance between two label sets: `1 - J * M` where `J` is the
/// Jaccard index and `M` is 1 for equal sets, 2/3 when one contains the
/// other, 1/3 for other overlaps and 0 for disjoint sets. Two empty sets are
/// equal and at distance 0.
pub fn masi_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a == b {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    if inter == 0 {
        return 1.0;
    }
    let union = a.union(b).count();
    let jaccard = inter as f64 / union as f64;
    let m = if a.is_subset(b) || b.is_subset(a) {
        2.0 / 3.0
    } else {
        1.0 / 3.0
    };
    1.0 - jaccard * m
}

/// `1 - D_o / D_e`. When nothing disagrees (`D_o = 0`) the result is 1.0,
/// including the degenerate case of a single value used everywhere.
pub fn krippendorff_alpha<V, D>(matrix: &[Vec<Option<V>>], distance: D) -> Result<f64, EvalError>
where
    V: Ord + Clone,
    D: Fn(&V, &V) -> f64,
{
    let units: Vec<Vec<&V>> = matrix
        .iter()
        .map(|row| row.iter().flatten().collect::<Vec<_>>())
        .filter(|vals| vals.len() >= 2)
        .collect();
    let total: usize = units.iter().map(Vec::len).sum();
    if total < 2 {
        return Err(EvalError::NoPairableValues);
    }
    let n = total as f64;

    let mut observed = 0.0;
    for vals in &units {
        let mut within = 0.0;
        for (i, a) in vals.iter().enumerate() {
            for (j, b) in vals.iter().enumerate() {
                if i != j {
                    within += distance(a, b);
                }
            }
        }
        observed += within / (vals.len() - 1) as f64;
    }
    observed /= n;
    if observed == 0.0 {
        return Ok(1.0);
    }

    let mut counts: BTreeMap<&V, usize> = BTreeMap::new();
    for v in units.iter().flatten() {
        *counts.entry(*v).or_default() += 1;
    }
    let mut expected = 0.0;
    for (a, &na) in &counts {
        for (b, &nb) in &counts {
            let pairs = if a == b { na * (na - 1) } else { na * nb };
            expected += pairs as f64 * distance(a, b);
        }
    }
    expected /= n * (n - 1.0);
    Ok(1.0 - observed / expected)
}
