//! CART-style regression tree: greedy variance-reduction splits, leaf means,
//! fully deterministic for fixed data and options.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TreeOptions {
    /// Maximum split depth; 0 makes the root a leaf (global mean).
    pub max_depth: usize,
    /// Minimum samples on each side of a split.
    pub min_leaf: usize,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_leaf: 5,
        }
    }
}

/// Flat node-array representation (also the JSON artifact layout).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    opts: TreeOptions,
    nodes: Vec<TreeNode>,
}

/// Best split of `indices` on `feature`: (threshold, sse_after). Scans the
/// sorted prefix sums; candidate thresholds are midpoints between distinct
/// consecutive values with `min_leaf` honoured on both sides.
fn best_split_on_feature(
    x: &[Vec<f64>],
    y: &[f64],
    indices: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let n = indices.len();
    if n < 2 * min_leaf {
        return None;
    }
    let mut order: Vec<usize> = indices.to_vec();
    order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));

    let total_sum: f64 = order.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();

    let mut left_sum = 0.0;
    let mut left_sq = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..n - 1 {
        let i = order[k];
        left_sum += y[i];
        left_sq += y[i] * y[i];
        let n_left = k + 1;
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let v_here = x[order[k]][feature];
        let v_next = x[order[k + 1]][feature];
        if v_here == v_next {
            continue; // cannot separate equal values
        }
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let sse = (left_sq - left_sum * left_sum / n_left as f64)
            + (right_sq - right_sum * right_sum / n_right as f64);
        if best.is_none_or(|(_, b)| sse < b) {
            best = Some((0.5 * (v_here + v_next), sse));
        }
    }
    best
}

/// Fits a tree on all features.
pub fn tree_fit(x: &[Vec<f64>], y: &[f64], opts: TreeOptions) -> RegressionTree {
    let features: Vec<usize> = (0..x.first().map_or(0, |r| r.len())).collect();
    tree_fit_on_features(x, y, opts, &|_| features.clone())
}

/// Fits a tree where each split considers the feature subset produced by
/// `feature_picker` (the random-forest hook; the plain tree passes all).
pub fn tree_fit_on_features(
    x: &[Vec<f64>],
    y: &[f64],
    opts: TreeOptions,
    feature_picker: &dyn Fn(usize) -> Vec<usize>,
) -> RegressionTree {
    assert!(
        !x.is_empty() && x.len() == y.len(),
        "non-empty aligned data"
    );
    let n_features = x[0].len();
    let mut builder = Builder {
        x,
        y,
        opts,
        nodes: Vec::new(),
    };
    // resolve the feature subset per node at build time
    let indices: Vec<usize> = (0..x.len()).collect();
    build_with_picker(&mut builder, &indices, 0, n_features, feature_picker);
    RegressionTree {
        nodes: builder.nodes,
    }
}

fn build_with_picker(
    b: &mut Builder<'_>,
    indices: &[usize],
    depth: usize,
    n_features: usize,
    picker: &dyn Fn(usize) -> Vec<usize>,
) -> usize {
    let mean = indices.iter().map(|&i| b.y[i]).sum::<f64>() / indices.len() as f64;
    let sse_node: f64 = indices.iter().map(|&i| (b.y[i] - mean).powi(2)).sum();
    if depth >= b.opts.max_depth || indices.len() < 2 * b.opts.min_leaf || sse_node == 0.0 {
        b.nodes.push(TreeNode::Leaf { value: mean });
        return b.nodes.len() - 1;
    }
    let features = picker(n_features);
    let mut best: Option<(usize, f64, f64)> = None;
    for &f in &features {
        if let Some((threshold, sse)) = best_split_on_feature(b.x, b.y, indices, f, b.opts.min_leaf)
        {
            if best.is_none_or(|(_, _, s)| sse < s) {
                best = Some((f, threshold, sse));
            }
        }
    }
    let Some((feature, threshold, sse_split)) = best else {
        b.nodes.push(TreeNode::Leaf { value: mean });
        return b.nodes.len() - 1;
    };
    if sse_split >= sse_node {
        b.nodes.push(TreeNode::Leaf { value: mean });
        return b.nodes.len() - 1;
    }
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        indices.iter().partition(|&&i| b.x[i][feature] <= threshold);
    let node = b.nodes.len();
    b.nodes.push(TreeNode::Leaf { value: mean });
    let left = build_with_picker(b, &left_idx, depth + 1, n_features, picker);
    let right = build_with_picker(b, &right_idx, depth + 1, n_features, picker);
    b.nodes[node] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    node
}

/// Predicts one sample.
pub fn tree_predict_one(tree: &RegressionTree, x: &[f64]) -> f64 {
    let mut node = 0;
    loop {
        match &tree.nodes[node] {
            TreeNode::Leaf { value } => return *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if x[*feature] <= *threshold {
                    *left
                } else {
                    *right
                };
            }
        }
    }
}

/// Predicts a batch.
pub fn tree_predict(tree: &RegressionTree, x: &[Vec<f64>]) -> Vec<f64> {
    x.iter().map(|row| tree_predict_one(tree, row)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_targets_single_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![3.3; 10];
        let tree = tree_fit(&x, &y, TreeOptions::default());
        assert_eq!(tree.nodes.len(), 1);
        assert_relative_eq!(tree_predict_one(&tree, &[99.0]), 3.3, epsilon = 1e-12);
    }

    #[test]
    fn step_function_split_found_exhaustively() {
        // 10 points, plateau 1.0 below x=5, plateau 4.0 above; depth 1 must
        // split at the boundary midpoint with leaf means at the plateaus
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { 4.0 }).collect();
        let tree = tree_fit(
            &x,
            &y,
            TreeOptions {
                max_depth: 1,
                min_leaf: 1,
            },
        );
        match &tree.nodes[0] {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_relative_eq!(*threshold, 4.5, epsilon = 1e-12);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_relative_eq!(tree_predict_one(&tree, &[0.0]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(tree_predict_one(&tree, &[9.0]), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn depth_zero_is_global_mean() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let tree = tree_fit(
            &x,
            &y,
            TreeOptions {
                max_depth: 0,
                min_leaf: 1,
            },
        );
        for probe in [-10.0, 0.0, 10.0] {
            assert_relative_eq!(tree_predict_one(&tree, &[probe]), 3.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn predictions_bounded_by_training_targets() {
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.53).sin() * 3.0).collect();
        let tree = tree_fit(&x, &y, TreeOptions::default());
        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &v| {
                (acc.0.min(v), acc.1.max(v))
            });
        for probe in &x {
            let p = tree_predict_one(&tree, probe);
            assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
        }
        // leaves cannot extrapolate either
        let p = tree_predict_one(&tree, &[100.0, -100.0]);
        assert!(p >= lo && p <= hi);
    }

    #[test]
    fn deterministic_fit() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64 % 7.0, i as f64 % 3.0])
            .collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64).sqrt()).collect();
        let a = tree_fit(&x, &y, TreeOptions::default());
        let b = tree_fit(&x, &y, TreeOptions::default());
        assert_eq!(a, b);
    }
}
