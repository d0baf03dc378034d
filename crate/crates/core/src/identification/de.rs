//! Bound-constrained differential evolution (rand/1/bin).
//!
//! The optimizer works in the unit cube; [`ParameterSpec::decode`] maps
//! candidates to physical values, so bounds hold for every evaluation.
//! Trial vectors for one generation are drawn serially from the seeded
//! stream, evaluated concurrently, and selected serially, which makes runs
//! bit-identical for a fixed seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IdError, ParameterSpec};

/// Mutation factor (rand/1).
const F: f64 = 0.7;
/// Binomial crossover rate.
const CR: f64 = 0.9;
/// Population size per search dimension.
const POP_PER_DIM: usize = 15;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HistoryPoint {
    pub evaluations: usize,
    pub best_cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OptimizeResult {
    /// Best candidate in physical units, ordered as the spec entries.
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub evaluations: usize,
    /// Best-so-far cost after initialization and after each generation.
    pub history: Vec<HistoryPoint>,
}

/// Minimizes `cost` over the spec's box within `budget` evaluations.
/// Exhausting the budget is not an error; the best-so-far is returned.
pub fn optimize<C>(
    cost: C,
    spec: &ParameterSpec,
    budget: usize,
    seed: u64,
) -> Result<OptimizeResult, IdError>
where
    C: Fn(&[f64]) -> f64 + Sync,
{
    let dim = spec.dim();
    if dim == 0 {
        return Err(IdError::InvalidSpec("empty parameter spec".into()));
    }
    let pop_size = POP_PER_DIM * dim;
    if budget < pop_size {
        return Err(IdError::BudgetTooSmall {
            budget,
            population: pop_size,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Latin hypercube initialization: one sample per stratum and dimension
    let mut population: Vec<Vec<f64>> = vec![vec![0.0; dim]; pop_size];
    for j in 0..dim {
        let mut strata: Vec<usize> = (0..pop_size).collect();
        for k in (1..pop_size).rev() {
            strata.swap(k, rng.gen_range(0..=k));
        }
        for (i, member) in population.iter_mut().enumerate() {
            member[j] = (strata[i] as f64 + rng.gen::<f64>()) / pop_size as f64;
        }
    }
    let mut costs: Vec<f64> = population
        .par_iter()
        .map(|u| cost(&spec.decode(u)))
        .collect();
    let mut evaluations = pop_size;

    let best_index = |costs: &[f64]| {
        costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    };
    let mut history = vec![HistoryPoint {
        evaluations,
        best_cost: costs[best_index(&costs)],
    }];

    while evaluations + pop_size <= budget {
        // serial mutation/crossover phase
        let trials: Vec<Vec<f64>> = (0..pop_size)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.gen_range(0..pop_size);
                    if r != i {
                        return r;
                    }
                };
                let (r1, mut r2, mut r3) = (pick(), pick(), pick());
                while r2 == r1 {
                    r2 = pick();
                }
                while r3 == r1 || r3 == r2 {
                    r3 = pick();
                }
                let j_rand = rng.gen_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == j_rand || rng.gen::<f64>() < CR {
                            (population[r1][j] + F * (population[r2][j] - population[r3][j]))
                                .clamp(0.0, 1.0)
                        } else {
                            population[i][j]
                        }
                    })
                    .collect()
            })
            .collect();

        let trial_costs: Vec<f64> = trials.par_iter().map(|u| cost(&spec.decode(u))).collect();
        evaluations += pop_size;

        // deferred selection
        for i in 0..pop_size {
            if trial_costs[i] <= costs[i] {
                population[i] = trials[i].clone();
                costs[i] = trial_costs[i];
            }
        }
        history.push(HistoryPoint {
            evaluations,
            best_cost: costs[best_index(&costs)],
        });
    }

    let b = best_index(&costs);
    Ok(OptimizeResult {
        best: spec.decode(&population[b]),
        best_cost: costs[b],
        evaluations,
        history,
    })
}
