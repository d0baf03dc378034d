//! Random forest of regression trees: bootstrap resamples with per-split
//! feature subsampling; the forest prediction is the mean of tree
//! predictions.

use std::cell::RefCell;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{tree_fit_on_features, tree_predict_one, RegressionTree, TreeOptions};
use crate::seeds;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ForestOptions {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered at each split, (0, 1]. At 1.0 every
    /// split sees all features and consumes no randomness.
    pub feature_rate: f64,
    /// Disabled, every tree trains on the full sample (used by equivalence
    /// tests).
    pub bootstrap: bool,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            trees: 50,
            max_depth: 8,
            min_leaf: 5,
            feature_rate: 0.8,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
    pub tree_seeds: Vec<u64>,
    pub feature_rate: f64,
}

/// Fits `opts.trees` trees; deterministic for a fixed seed.
pub fn forest_fit(x: &[Vec<f64>], y: &[f64], opts: ForestOptions, seed: u64) -> RandomForest {
    assert!(opts.trees >= 1, "forest needs at least one tree");
    assert!(
        opts.feature_rate > 0.0 && opts.feature_rate <= 1.0,
        "feature_rate must be in (0, 1]"
    );
    let n = x.len();
    let tree_seeds: Vec<u64> = (0..opts.trees)
        .map(|k| seeds::subseed(seed, seeds::streams::FOREST + ((k as u64) << 8)))
        .collect();
    let tree_opts = TreeOptions {
        max_depth: opts.max_depth,
        min_leaf: opts.min_leaf,
    };
    let trees = tree_seeds
        .iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let (xb, yb): (Vec<Vec<f64>>, Vec<f64>) = if opts.bootstrap {
                let mut xb = Vec::with_capacity(n);
                let mut yb = Vec::with_capacity(n);
                for _ in 0..n {
                    let i = rng.gen_range(0..n);
                    xb.push(x[i].clone());
                    yb.push(y[i]);
                }
                (xb, yb)
            } else {
                (x.to_vec(), y.to_vec())
            };
            let rng = RefCell::new(rng);
            let picker = |n_features: usize| -> Vec<usize> {
                if opts.feature_rate >= 1.0 {
                    return (0..n_features).collect();
                }
                let k =
                    ((opts.feature_rate * n_features as f64).ceil() as usize).clamp(1, n_features);
                let mut all: Vec<usize> = (0..n_features).collect();
                let mut rng = rng.borrow_mut();
                all.shuffle(&mut *rng);
                all.truncate(k);
                all.sort_unstable();
                all
            };
            tree_fit_on_features(&xb, &yb, tree_opts, &picker)
        })
        .collect();
    RandomForest {
        trees,
        tree_seeds,
        feature_rate: opts.feature_rate,
    }
}

/// Mean of tree predictions.
pub fn forest_predict(forest: &RandomForest, x: &[Vec<f64>]) -> Vec<f64> {
    let t = forest.trees.len() as f64;
    x.iter()
        .map(|row| {
            forest
                .trees
                .iter()
                .map(|tree| tree_predict_one(tree, row))
                .sum::<f64>()
                / t
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::tree::{tree_fit, tree_predict};
    use rand::Rng;

    fn noisy_sine(n: usize, noise: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![6.0 * i as f64 / (n - 1) as f64])
            .collect();
        let y = x
            .iter()
            .map(|r| {
                let e = if noise > 0.0 {
                    rng.gen_range(-noise..noise)
                } else {
                    0.0
                };
                r[0].sin() + e
            })
            .collect();
        (x, y)
    }

    #[test]
    fn single_tree_without_bootstrap_equals_plain_tree() {
        let (x, y) = noisy_sine(60, 0.1, 1);
        let opts = ForestOptions {
            trees: 1,
            bootstrap: false,
            feature_rate: 1.0,
            max_depth: 6,
            min_leaf: 3,
        };
        let forest = forest_fit(&x, &y, opts, 9);
        let tree = tree_fit(
            &x,
            &y,
            TreeOptions {
                max_depth: 6,
                min_leaf: 3,
            },
        );
        assert_eq!(forest.trees[0], tree);
        assert_eq!(forest_predict(&forest, &x), tree_predict(&tree, &x));
    }

    #[test]
    fn identical_resamples_average_to_the_tree() {
        let (x, y) = noisy_sine(40, 0.05, 2);
        let opts = ForestOptions {
            trees: 7,
            bootstrap: false,
            feature_rate: 1.0,
            ..Default::default()
        };
        let forest = forest_fit(&x, &y, opts, 3);
        for w in forest.trees.windows(2) {
            assert_eq!(w[0], w[1]);
        }
        let pred = forest_predict(&forest, &x);
        let single = tree_predict(&forest.trees[0], &x);
        for (a, b) in pred.iter().zip(&single) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forest_prediction_is_exact_tree_mean() {
        let (x, y) = noisy_sine(80, 0.2, 3);
        let forest = forest_fit(&x, &y, ForestOptions::default(), 5);
        let pred = forest_predict(&forest, &x);
        for (k, row) in x.iter().enumerate() {
            let mean = forest
                .trees
                .iter()
                .map(|t| tree_predict_one(t, row))
                .sum::<f64>()
                / forest.trees.len() as f64;
            assert_eq!(pred[k], mean);
        }
    }

    #[test]
    fn forest_beats_single_tree_on_held_out_noise() {
        // Monte-Carlo comparison over 20 seeds; the ensemble should win in
        // at least 80% of trials
        let mut wins = 0;
        let trials = 20;
        for seed in 0..trials {
            let (x_train, y_train) = noisy_sine(120, 0.35, 100 + seed);
            let (x_test, _) = noisy_sine(60, 0.0, 999);
            let y_test: Vec<f64> = x_test.iter().map(|r| r[0].sin()).collect();

            let tree = tree_fit(
                &x_train,
                &y_train,
                TreeOptions {
                    max_depth: 10,
                    min_leaf: 2,
                },
            );
            let forest = forest_fit(
                &x_train,
                &y_train,
                ForestOptions {
                    trees: 30,
                    max_depth: 10,
                    min_leaf: 2,
                    feature_rate: 1.0,
                    bootstrap: true,
                },
                200 + seed,
            );
            let rmse = |pred: &[f64]| {
                (pred
                    .iter()
                    .zip(&y_test)
                    .map(|(p, t)| (p - t).powi(2))
                    .sum::<f64>()
                    / y_test.len() as f64)
                    .sqrt()
            };
            let tree_rmse = rmse(&tree_predict(&tree, &x_test));
            let forest_rmse = rmse(&forest_predict(&forest, &x_test));
            if forest_rmse <= tree_rmse {
                wins += 1;
            }
        }
        assert!(
            wins * 5 >= trials * 4,
            "forest won only {wins}/{trials} trials"
        );
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (x, y) = noisy_sine(50, 0.1, 4);
        let a = forest_fit(&x, &y, ForestOptions::default(), 77);
        let b = forest_fit(&x, &y, ForestOptions::default(), 77);
        assert_eq!(a, b);
    }
}
