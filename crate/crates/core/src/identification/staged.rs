//! Two-stage identification: fresh-cell parameters first, then the aged-cell
//! subset per dataset with the fresh result frozen.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cost::{FreshCostProblem, IdentificationDataset};
use super::de::{optimize, OptimizeResult};
use super::{IdError, ParameterSpec};
use crate::grid::SpatialGrid;
use crate::ocp::{OcpBranches, OcpTable};
use crate::params::CellParameters;
use crate::seeds;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageResult {
    pub parameters: BTreeMap<String, f64>,
    pub cost: f64,
    pub evaluations: usize,
    pub history: Vec<super::de::HistoryPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StagedResult {
    pub stage1: StageResult,
    /// One entry per aged dataset, in input order.
    pub stage2: Vec<StageResult>,
    /// Drift of `theta_n_100` across life: stage-1 value followed by each
    /// aged re-identification.
    pub theta_n_100_trajectory: Vec<f64>,
    /// Drift of the lumped SEI parameter over the aged datasets.
    pub l_sei_over_kappa_trajectory: Vec<f64>,
}

fn stage_result(spec: &ParameterSpec, res: &OptimizeResult) -> StageResult {
    StageResult {
        parameters: spec
            .names()
            .iter()
            .zip(&res.best)
            .map(|(n, v)| (n.to_string(), *v))
            .collect(),
        cost: res.best_cost,
        evaluations: res.evaluations,
        history: res.history.clone(),
    }
}

/// Identification settings shared by both stages.
pub struct StagedSettings {
    pub budget_stage1: usize,
    pub budget_stage2: usize,
    pub weights: [f64; 3],
    pub seed: u64,
    pub initial_soc: f64,
    pub default_temperature: f64,
}

impl Default for StagedSettings {
    fn default() -> Self {
        Self {
            budget_stage1: 20_000,
            budget_stage2: 4_000,
            weights: [1.0, 1.0, 1.0],
            seed: 0,
            initial_soc: 1.0,
            default_temperature: 298.15,
        }
    }
}

/// Runs stage 1 on the fresh dataset and stage 2 on each aged dataset.
/// With no aged datasets, stage 2 is skipped and only stage 1 is reported.
#[allow(clippy::too_many_arguments)]
pub fn identify_two_stage(
    base: &CellParameters,
    grid: &SpatialGrid,
    positive_ocp: &OcpBranches,
    negative_ocp: &OcpTable,
    fresh: &IdentificationDataset,
    aged: &[IdentificationDataset],
    settings: &StagedSettings,
) -> Result<StagedResult, IdError> {
    let spec1 = ParameterSpec::theta1(base);
    let problem = FreshCostProblem {
        base,
        grid,
        positive_ocp,
        negative_ocp,
        spec: &spec1,
        dataset: fresh,
        weights: settings.weights,
        initial_soc: settings.initial_soc,
        default_temperature: settings.default_temperature,
    };
    let res1 = optimize(
        |theta| problem.cost(theta),
        &spec1,
        settings.budget_stage1,
        seeds::subseed(settings.seed, seeds::streams::OPTIMIZER),
    )?;
    let (params1, _) = spec1.apply(base, &res1.best)?;
    let stage1 = stage_result(&spec1, &res1);

    let mut stage2 = Vec::with_capacity(aged.len());
    let mut theta_traj = vec![params1.theta_n_100];
    let mut lump_traj = Vec::new();
    for (k, dataset) in aged.iter().enumerate() {
        let spec2 = ParameterSpec::theta2(&params1);
        let problem = FreshCostProblem {
            base: &params1,
            grid,
            positive_ocp,
            negative_ocp,
            spec: &spec2,
            dataset,
            weights: settings.weights,
            initial_soc: settings.initial_soc,
            default_temperature: settings.default_temperature,
        };
        let res = optimize(
            |theta| problem.cost(theta),
            &spec2,
            settings.budget_stage2,
            seeds::subseed(settings.seed, seeds::streams::OPTIMIZER + 100 + k as u64),
        )?;
        theta_traj.push(res.best[2]);
        lump_traj.push(res.best[0]);
        stage2.push(stage_result(&spec2, &res));
    }

    Ok(StagedResult {
        stage1,
        stage2,
        theta_n_100_trajectory: theta_traj,
        l_sei_over_kappa_trajectory: lump_traj,
    })
}

/// Per-parameter spread of the optimum across independent optimizer
/// restarts: a practical identifiability diagnostic. Parameters whose
/// restarts scatter widely are weakly identifiable from the data at hand.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RestartSpread {
    pub name: String,
    pub min: f64,
    pub max: f64,
    /// (max - min) / |midpoint|; large values flag weak identifiability.
    pub relative_spread: f64,
}

/// Runs `optimize` once per seed and reports the spread of each recovered
/// parameter.
pub fn restart_spread<C>(
    cost: C,
    spec: &ParameterSpec,
    budget_per_restart: usize,
    restart_seeds: &[u64],
) -> Result<Vec<RestartSpread>, IdError>
where
    C: Fn(&[f64]) -> f64 + Sync,
{
    let mut bests: Vec<Vec<f64>> = Vec::with_capacity(restart_seeds.len());
    for &seed in restart_seeds {
        bests.push(optimize(&cost, spec, budget_per_restart, seed)?.best);
    }
    Ok(spec
        .entries
        .iter()
        .enumerate()
        .map(|(j, entry)| {
            let column: Vec<f64> = bests.iter().map(|b| b[j]).collect();
            let min = column.iter().copied().fold(f64::INFINITY, f64::min);
            let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mid = 0.5 * (min + max);
            RestartSpread {
                name: entry.name.clone(),
                min,
                max,
                relative_spread: if mid != 0.0 {
                    (max - min) / mid.abs()
                } else {
                    f64::INFINITY
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::espm::{SimulationOptions, Simulator};
    use crate::ocp;
    use crate::timeseries::TimeSeries;

    #[test]
    fn restart_spread_flags_flat_directions() {
        use crate::identification::{ParamEntry, ParamScale};
        // x0 is pinned by the objective, x1 is a flat direction
        let spec = ParameterSpec::new(vec![
            ParamEntry {
                name: "pinned".into(),
                lower: -1.0,
                upper: 1.0,
                scale: ParamScale::Linear,
            },
            ParamEntry {
                name: "flat".into(),
                lower: -1.0,
                upper: 1.0,
                scale: ParamScale::Linear,
            },
        ])
        .unwrap();
        let spread = restart_spread(|x: &[f64]| x[0] * x[0], &spec, 1000, &[1, 2, 3, 4]).unwrap();
        assert!(spread[0].relative_spread.abs() < 1.0 || spread[0].max - spread[0].min < 0.05);
        assert!(
            spread[1].max - spread[1].min > 10.0 * (spread[0].max - spread[0].min).max(1e-6),
            "flat direction should scatter: {spread:?}"
        );
    }

    /// Generates a dataset from the model itself, optionally with an extra
    /// film resistance standing in for SEI growth.
    fn make_dataset(
        params: &CellParameters,
        grid: &SpatialGrid,
        pos: &OcpBranches,
        neg: &OcpTable,
        r_film_offset: f64,
    ) -> IdentificationDataset {
        let sim = Simulator::new(
            params,
            grid,
            pos,
            neg,
            SimulationOptions {
                r_film_offset,
                ..Default::default()
            },
        )
        .unwrap();
        let i = params.capacity_ah() / 2.0;
        let pulse = TimeSeries::constant_current(i, 600.0, 15.0)
            .chain(&TimeSeries::constant_current(-i * 0.5, 300.0, 15.0))
            .chain(&TimeSeries::constant_current(i, 600.0, 15.0));
        let out = sim.simulate(&pulse).unwrap();
        let mut record = pulse;
        record.voltage = Some(out.voltage.clone());
        IdentificationDataset {
            record,
            soc_cc: out.soc_n.clone(),
        }
    }

    #[test]
    fn no_aged_datasets_skips_stage_two() {
        let p = CellParameters::default_nmc();
        let g = SpatialGrid::new(6, 4, 3, 4).unwrap();
        let pos = OcpBranches::Single(ocp::default_nmc_table());
        let neg = ocp::default_negative_table();
        let fresh = make_dataset(&p, &g, &pos, &neg, 0.0);
        let settings = StagedSettings {
            budget_stage1: 200,
            ..Default::default()
        };
        // tiny budget: only checking the control flow here
        let res = identify_two_stage(&p, &g, &pos, &neg, &fresh, &[], &settings).unwrap();
        assert!(res.stage2.is_empty());
        assert_eq!(res.theta_n_100_trajectory.len(), 1);
        assert_eq!(res.stage1.parameters.len(), 9);
    }

    #[test]
    fn grown_sei_identified_as_increasing_lump() {
        // synthetic aging schedule: two aged datasets with growing film
        let p = CellParameters::default_nmc();
        let g = SpatialGrid::new(6, 4, 3, 4).unwrap();
        let pos = OcpBranches::Single(ocp::default_nmc_table());
        let neg = ocp::default_negative_table();
        let fresh = make_dataset(&p, &g, &pos, &neg, 0.0);
        let a_n = p.specific_area(crate::params::Electrode::Negative);
        let lump_to_r = a_n * p.a_cell * p.l_n;
        let aged = vec![
            make_dataset(&p, &g, &pos, &neg, 0.02 / lump_to_r),
            make_dataset(&p, &g, &pos, &neg, 0.08 / lump_to_r),
        ];
        let settings = StagedSettings {
            budget_stage1: 1500,
            budget_stage2: 2000,
            seed: 3,
            ..Default::default()
        };
        let res = identify_two_stage(&p, &g, &pos, &neg, &fresh, &aged, &settings).unwrap();
        assert_eq!(res.l_sei_over_kappa_trajectory.len(), 2);
        assert!(
            res.l_sei_over_kappa_trajectory[1] > res.l_sei_over_kappa_trajectory[0],
            "lumped SEI parameter should grow across the aging schedule: {:?}",
            res.l_sei_over_kappa_trajectory
        );
    }
}
