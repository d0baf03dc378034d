//! Simulation-in-the-loop parameter identification.
//!
//! A [`ParameterSpec`] names the free parameters with bounds and scaling;
//! [`de::optimize`] searches the box with differential evolution;
//! [`cost`] holds the fresh-cell and OCV-based objectives; [`staged`]
//! chains the fresh (stage 1) and aged (stage 2) identification phases.

pub mod cost;
pub mod de;
pub mod staged;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{CellParameters, Electrode};

pub use cost::{FreshCostProblem, IdentificationDataset, OcvCostProblem, OcvDataset};
pub use de::{optimize, OptimizeResult};
pub use staged::{identify_two_stage, restart_spread, RestartSpread, StagedResult};

#[derive(Debug, Error)]
pub enum IdError {
    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),
    #[error("infeasible stoichiometry window: {0}")]
    InfeasibleWindow(String),
    #[error("budget {budget} is smaller than the population {population}")]
    BudgetTooSmall { budget: usize, population: usize },
    #[error("invalid parameter spec: {0}")]
    InvalidSpec(String),
    #[error("dataset error: {0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub scale: ParamScale,
}

/// Ordered search-space definition. Decoding maps the optimizer's unit cube
/// onto physical values (log-scaled entries interpolate in log10 space), so
/// every evaluated candidate respects its bounds by construction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParameterSpec {
    pub entries: Vec<ParamEntry>,
}

impl ParameterSpec {
    pub fn new(entries: Vec<ParamEntry>) -> Result<Self, IdError> {
        for e in &entries {
            if !(e.lower.is_finite() && e.upper.is_finite() && e.lower < e.upper) {
                return Err(IdError::InvalidSpec(format!(
                    "bounds of `{}` must be finite with lower < upper, got [{}, {}]",
                    e.name, e.lower, e.upper
                )));
            }
            if e.scale == ParamScale::Log && e.lower <= 0.0 {
                return Err(IdError::InvalidSpec(format!(
                    "log-scaled `{}` needs a positive lower bound",
                    e.name
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    /// Maps a unit-cube point to physical parameter values.
    pub fn decode(&self, unit: &[f64]) -> Vec<f64> {
        debug_assert_eq!(unit.len(), self.dim());
        self.entries
            .iter()
            .zip(unit)
            .map(|(e, &u)| {
                let u = u.clamp(0.0, 1.0);
                match e.scale {
                    ParamScale::Linear => e.lower + u * (e.upper - e.lower),
                    ParamScale::Log => {
                        let (lo, hi) = (e.lower.log10(), e.upper.log10());
                        10f64.powf(lo + u * (hi - lo))
                    }
                }
            })
            .collect()
    }

    /// Inverse of [`decode`](Self::decode), clamped to the unit cube.
    pub fn encode(&self, physical: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .zip(physical)
            .map(|(e, &v)| {
                let u = match e.scale {
                    ParamScale::Linear => (v - e.lower) / (e.upper - e.lower),
                    ParamScale::Log => {
                        (v.log10() - e.lower.log10()) / (e.upper.log10() - e.lower.log10())
                    }
                };
                u.clamp(0.0, 1.0)
            })
            .collect()
    }

    /// Applies named values onto a copy of `base`. The lumped SEI parameter
    /// `l_sei_over_kappa` does not live in [`CellParameters`]; it converts to
    /// a film-resistance offset `lump / (a_n A_cell L_n)` returned alongside.
    pub fn apply(
        &self,
        base: &CellParameters,
        values: &[f64],
    ) -> Result<(CellParameters, f64), IdError> {
        let mut p = base.clone();
        let mut r_film_offset = 0.0;
        for (e, &v) in self.entries.iter().zip(values) {
            match e.name.as_str() {
                "a_cell" => p.a_cell = v,
                "r_l" => p.r_l = v,
                "r_el" => p.r_el = v,
                "nu_p" => p.nu_p = v,
                "nu_n" => p.nu_n = v,
                "r_p" => p.r_p = v,
                "r_n" => p.r_n = v,
                "d_s_p_ref" => p.d_s_p_ref = v,
                "d_s_n_ref" => p.d_s_n_ref = v,
                "k_p" => p.k_p = v,
                "k_n" => p.k_n = v,
                "theta_p_0" => p.theta_p_0 = v,
                "theta_p_100" => p.theta_p_100 = v,
                "theta_n_0" => p.theta_n_0 = v,
                "theta_n_100" => p.theta_n_100 = v,
                "l_sei_over_kappa" => {
                    let a_n = p.specific_area(Electrode::Negative);
                    r_film_offset = v / (a_n * p.a_cell * p.l_n);
                }
                other => return Err(IdError::UnknownParameter(other.to_string())),
            }
        }
        Ok((p, r_film_offset))
    }

    /// Fresh-cell preset: geometry, transport, and the 100% stoichiometries.
    /// Default bounds are relative to the base values and must be reviewed
    /// per cell.
    pub fn theta1(base: &CellParameters) -> Self {
        let lin = |name: &str, v: f64, rel: f64, lo_cap: f64, hi_cap: f64| ParamEntry {
            name: name.into(),
            lower: (v * (1.0 - rel)).max(lo_cap),
            upper: (v * (1.0 + rel)).min(hi_cap),
            scale: ParamScale::Linear,
        };
        let log = |name: &str, v: f64, factor: f64| ParamEntry {
            name: name.into(),
            lower: v / factor,
            upper: v * factor,
            scale: ParamScale::Log,
        };
        Self {
            entries: vec![
                lin("a_cell", base.a_cell, 0.3, 1e-6, f64::INFINITY),
                log("r_l", base.r_l.max(1e-4), 5.0),
                lin("nu_n", base.nu_n, 0.3, 0.05, 0.95),
                lin("r_p", base.r_p, 0.5, 1e-8, f64::INFINITY),
                lin("r_n", base.r_n, 0.5, 1e-8, f64::INFINITY),
                log("d_s_p_ref", base.d_s_p_ref, 10.0),
                log("d_s_n_ref", base.d_s_n_ref, 10.0),
                lin(
                    "theta_p_100",
                    base.theta_p_100,
                    0.3,
                    0.01,
                    base.theta_p_0 - 0.05,
                ),
                lin(
                    "theta_n_100",
                    base.theta_n_100,
                    0.3,
                    base.theta_n_0 + 0.05,
                    0.999,
                ),
            ],
        }
    }

    /// Aged-cell preset: the lumped SEI parameter and the window drift.
    pub fn theta2(base: &CellParameters) -> Self {
        Self {
            entries: vec![
                ParamEntry {
                    name: "l_sei_over_kappa".into(),
                    lower: 1e-6,
                    upper: 0.5,
                    scale: ParamScale::Log,
                },
                ParamEntry {
                    name: "theta_p_0".into(),
                    lower: (base.theta_p_0 - 0.10).max(base.theta_p_100 + 0.05),
                    upper: (base.theta_p_0 + 0.05).min(1.0),
                    scale: ParamScale::Linear,
                },
                ParamEntry {
                    name: "theta_n_100".into(),
                    lower: (base.theta_n_100 - 0.15).max(base.theta_n_0 + 0.05),
                    upper: (base.theta_n_100 + 0.02).min(0.999),
                    scale: ParamScale::Linear,
                },
            ],
        }
    }

    /// OCV-problem preset over `{theta_p_100, theta_n_100, Q_n, Q_p}` for a
    /// cell of roughly `q_cell_ah` discharged capacity.
    pub fn vartheta(q_cell_ah: f64) -> Self {
        Self {
            entries: vec![
                ParamEntry {
                    name: "theta_p_100".into(),
                    lower: 0.01,
                    upper: 0.6,
                    scale: ParamScale::Linear,
                },
                ParamEntry {
                    name: "theta_n_100".into(),
                    lower: 0.4,
                    upper: 1.0,
                    scale: ParamScale::Linear,
                },
                ParamEntry {
                    name: "q_n_ah".into(),
                    lower: 0.5 * q_cell_ah,
                    upper: 3.0 * q_cell_ah,
                    scale: ParamScale::Linear,
                },
                ParamEntry {
                    name: "q_p_ah".into(),
                    lower: 0.5 * q_cell_ah,
                    upper: 3.0 * q_cell_ah,
                    scale: ParamScale::Linear,
                },
            ],
        }
    }
}
