//! Bootstrap-aggregated GP regression. Members train on resamples of one
//! normalized training set; the ensemble prediction combines member means
//! and spreads them by the law of total variance.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gp::{gp_fit, gp_predict, GpError, GpModel, GpOptions};
use crate::seeds;

#[derive(Debug, Error)]
pub enum BaggingError {
    #[error("ensemble needs at least one member, got {0}")]
    NoMembers(usize),
    #[error("member {index} failed to fit: {source}")]
    MemberFit {
        index: usize,
        #[source]
        source: GpError,
    },
    #[error("training data is empty or ragged")]
    BadData,
}

/// Z-score statistics for inputs and target, stored with the ensemble.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Normalization {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
}

impl Normalization {
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Self {
        let n = x.len() as f64;
        let d = x[0].len();
        let mut x_mean = vec![0.0; d];
        let mut x_std = vec![0.0; d];
        for j in 0..d {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let v = x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            x_mean[j] = m;
            x_std[j] = if v.sqrt() > 0.0 { v.sqrt() } else { 1.0 };
        }
        let y_mean = y.iter().sum::<f64>() / n;
        let y_var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
        let y_std = if y_var.sqrt() > 0.0 {
            y_var.sqrt()
        } else {
            1.0
        };
        Self {
            x_mean,
            x_std,
            y_mean,
            y_std,
        }
    }

    pub fn normalize_x(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| (v - self.x_mean[j]) / self.x_std[j])
                    .collect()
            })
            .collect()
    }

    pub fn normalize_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.y_mean) / self.y_std).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BagOptions {
    /// Resample with replacement; disabled, every member sees the full set
    /// (degenerate ensemble used by equivalence tests).
    pub bootstrap: bool,
    pub gp: GpOptions,
}

impl Default for BagOptions {
    fn default() -> Self {
        Self {
            bootstrap: true,
            gp: GpOptions::default(),
        }
    }
}

/// Bagged GP ensemble; immutable and shareable once fitted.
#[derive(Debug, Clone)]
pub struct BaggedEnsemble {
    pub members: Vec<GpModel>,
    pub member_seeds: Vec<u64>,
    /// Bootstrap index lists, one per member (identity when bootstrap is
    /// disabled).
    pub member_indices: Vec<Vec<usize>>,
    pub norm: Normalization,
    pub bootstrap: bool,
}

/// Fits `b` members on bootstrap resamples drawn from streams derived from
/// `seed`. Kernel hyperparameters are fitted once on the full normalized
/// training set and shared by every member, so members differ only through
/// their resamples; the member fits then run concurrently and the result is
/// deterministic.
pub fn bag_fit(
    x: &[Vec<f64>],
    y: &[f64],
    b: usize,
    seed: u64,
    opts: &BagOptions,
) -> Result<BaggedEnsemble, BaggingError> {
    if b == 0 {
        return Err(BaggingError::NoMembers(b));
    }
    if x.is_empty() || x.len() != y.len() {
        return Err(BaggingError::BadData);
    }
    let n = x.len();
    let norm = Normalization::fit(x, y);
    let xn = norm.normalize_x(x);
    let yn = norm.normalize_y(y);

    // one marginal-likelihood search on the full set
    let shared = match &opts.gp.fixed {
        Some(h) => h.clone(),
        None => {
            gp_fit(&xn, &yn, &opts.gp)
                .map_err(|source| BaggingError::MemberFit { index: 0, source })?
                .hyper
        }
    };
    let member_gp = GpOptions {
        fixed: Some(shared),
        ..opts.gp.clone()
    };

    let member_seeds: Vec<u64> = (0..b)
        .map(|k| seeds::subseed(seed, seeds::streams::BOOTSTRAP + ((k as u64) << 8)))
        .collect();
    let member_indices: Vec<Vec<usize>> = member_seeds
        .iter()
        .map(|&s| {
            if opts.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            }
        })
        .collect();

    let members: Result<Vec<GpModel>, BaggingError> = member_indices
        .par_iter()
        .enumerate()
        .map(|(index, idx)| {
            let xb: Vec<Vec<f64>> = idx.iter().map(|&i| xn[i].clone()).collect();
            let yb: Vec<f64> = idx.iter().map(|&i| yn[i]).collect();
            gp_fit(&xb, &yb, &member_gp).map_err(|source| BaggingError::MemberFit { index, source })
        })
        .collect();

    Ok(BaggedEnsemble {
        members: members?,
        member_seeds,
        member_indices,
        norm,
        bootstrap: opts.bootstrap,
    })
}

/// Ensemble prediction in original units. The mean averages member means;
/// the variance is the spread of member means plus the average member
/// variance (law of total variance), so it never falls below the average
/// member variance.
pub fn bag_predict(ens: &BaggedEnsemble, x_query: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let xq = ens.norm.normalize_x(x_query);
    let b = ens.members.len() as f64;
    let m = xq.len();
    let per_member: Vec<(Vec<f64>, Vec<f64>)> = ens
        .members
        .iter()
        .map(|model| gp_predict(model, &xq))
        .collect();

    let mut mean = vec![0.0; m];
    let mut var = vec![0.0; m];
    for q in 0..m {
        let mu_bar = per_member.iter().map(|(mu, _)| mu[q]).sum::<f64>() / b;
        let spread = per_member
            .iter()
            .map(|(mu, _)| (mu[q] - mu_bar).powi(2))
            .sum::<f64>()
            / b;
        let avg_var = per_member.iter().map(|(_, v)| v[q]).sum::<f64>() / b;
        mean[q] = mu_bar * ens.norm.y_std + ens.norm.y_mean;
        var[q] = (spread + avg_var) * ens.norm.y_std * ens.norm.y_std;
    }
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_data(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 90.0 - 15.0 * r[0] + (9.0 * r[0]).sin())
            .collect();
        (x, y)
    }

    #[test]
    fn degenerate_ensemble_equals_single_model() {
        let (x, y) = toy_data(12);
        let opts = BagOptions {
            bootstrap: false,
            ..Default::default()
        };
        let ens = bag_fit(&x, &y, 3, 7, &opts).unwrap();
        let single = bag_fit(&x, &y, 1, 7, &opts).unwrap();
        let queries: Vec<Vec<f64>> = (0..9).map(|i| vec![0.05 + 0.1 * i as f64]).collect();
        let (me, ve) = bag_predict(&ens, &queries);
        let (ms, vs) = bag_predict(&single, &queries);
        for q in 0..queries.len() {
            assert_relative_eq!(me[q], ms[q], epsilon = 1e-12);
            // identical members: zero spread term
            assert_relative_eq!(ve[q], vs[q], epsilon = 1e-12);
        }
    }

    #[test]
    fn predictive_variance_dominates_average_member_variance() {
        let (x, y) = toy_data(20);
        let ens = bag_fit(&x, &y, 6, 3, &BagOptions::default()).unwrap();
        let queries: Vec<Vec<f64>> = (0..15).map(|i| vec![-0.2 + 0.1 * i as f64]).collect();
        let xq = ens.norm.normalize_x(&queries);
        let (_, var) = bag_predict(&ens, &queries);
        let b = ens.members.len() as f64;
        for q in 0..queries.len() {
            let avg_member = ens
                .members
                .iter()
                .map(|m| gp_predict(m, std::slice::from_ref(&xq[q])).1[0])
                .sum::<f64>()
                / b
                * ens.norm.y_std
                * ens.norm.y_std;
            assert!(var[q] >= avg_member - 1e-12);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (x, y) = toy_data(15);
        let a = bag_fit(&x, &y, 4, 11, &BagOptions::default()).unwrap();
        let b = bag_fit(&x, &y, 4, 11, &BagOptions::default()).unwrap();
        assert_eq!(a.member_indices, b.member_indices);
        let q = vec![vec![0.33]];
        assert_eq!(bag_predict(&a, &q), bag_predict(&b, &q));
    }

    #[test]
    fn zero_members_rejected() {
        let (x, y) = toy_data(5);
        assert!(matches!(
            bag_fit(&x, &y, 0, 1, &BagOptions::default()),
            Err(BaggingError::NoMembers(0))
        ));
    }
}
