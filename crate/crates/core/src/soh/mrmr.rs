//! Greedy minimum-redundancy maximum-relevance feature ranking using
//! absolute Pearson correlation for both relevance (to the target) and
//! redundancy (to already selected features).

use thiserror::Error;

use crate::numeric::pearson;

#[derive(Debug, Error, PartialEq)]
pub enum MrmrError {
    #[error("need at least 2 candidate features, got {0}")]
    TooFewFeatures(usize),
    #[error("feature {0} has zero variance")]
    DegenerateFeature(usize),
    #[error("target has zero variance")]
    DegenerateTarget,
}

/// Ranks features by `relevance - redundancy` and returns the top `k`
/// column indices in selection order. `features` is row-major (samples by
/// columns).
pub fn mrmr_rank(features: &[Vec<f64>], target: &[f64], k: usize) -> Result<Vec<usize>, MrmrError> {
    let n_features = features.first().map_or(0, |r| r.len());
    if n_features < 2 {
        return Err(MrmrError::TooFewFeatures(n_features));
    }
    let column = |j: usize| -> Vec<f64> { features.iter().map(|r| r[j]).collect() };
    let columns: Vec<Vec<f64>> = (0..n_features).map(column).collect();

    let mut relevance = Vec::with_capacity(n_features);
    for (j, col) in columns.iter().enumerate() {
        match pearson(col, target) {
            Some(r) => relevance.push(r.abs()),
            None => {
                // distinguish a flat column from a flat target
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                if col.iter().all(|v| *v == mean) {
                    return Err(MrmrError::DegenerateFeature(j));
                }
                return Err(MrmrError::DegenerateTarget);
            }
        }
    }

    let k = k.min(n_features);
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut remaining: Vec<usize> = (0..n_features).collect();
    while selected.len() < k {
        let mut best = remaining[0];
        let mut best_score = f64::NEG_INFINITY;
        for &j in &remaining {
            let redundancy = if selected.is_empty() {
                0.0
            } else {
                selected
                    .iter()
                    .map(|&s| pearson(&columns[j], &columns[s]).map_or(1.0, |r| r.abs()))
                    .sum::<f64>()
                    / selected.len() as f64
            };
            let score = relevance[j] - redundancy;
            if score > best_score {
                best_score = score;
                best = j;
            }
        }
        selected.push(best);
        remaining.retain(|&j| j != best);
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicated_target_ranked_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let target: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let features: Vec<Vec<f64>> = target
            .iter()
            .map(|&y| vec![rng.gen_range(-1.0..1.0), y, rng.gen_range(-1.0..1.0)])
            .collect();
        let ranked = mrmr_rank(&features, &target, 3).unwrap();
        assert_eq!(ranked[0], 1);
    }

    #[test]
    fn redundant_twin_penalized_below_weaker_independent_feature() {
        // target = a + b with independent components; f0 == f1 == a,
        // f2 == b. All have relevance ~0.7; after picking f0 the twin f1
        // scores rel - 1 < 0 while f2 scores rel - 0 > 0 (hand-computed
        // ordering), so the independent feature goes second.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 400;
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target: Vec<f64> = (0..n).map(|i| a[i] + b[i]).collect();
        let features: Vec<Vec<f64>> = (0..n).map(|i| vec![a[i], a[i], b[i]]).collect();
        let ranked = mrmr_rank(&features, &target, 3).unwrap();
        assert_eq!(ranked[0], 0);
        assert_eq!(ranked[1], 2, "independent feature should beat the twin");
        assert_eq!(ranked[2], 1);
    }

    #[test]
    fn full_k_returns_permutation() {
        let features: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, (i * i) as f64, (-(i as f64)).exp()])
            .collect();
        let target: Vec<f64> = (0..20).map(|i| i as f64 * 0.7).collect();
        let mut ranked = mrmr_rank(&features, &target, 3).unwrap();
        ranked.sort_unstable();
        assert_eq!(ranked, vec![0, 1, 2]);
    }

    #[test]
    fn zero_variance_column_rejected() {
        let features: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0]).collect();
        let target: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(
            mrmr_rank(&features, &target, 2),
            Err(MrmrError::DegenerateFeature(1))
        );
    }
}
