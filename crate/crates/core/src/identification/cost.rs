//! Identification objectives: the fresh-cell voltage/SOC cost and the
//! OCV-based stoichiometry/capacity cost with its equality constraints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IdError, ParameterSpec};
use crate::espm::{SimulationOptions, Simulator};
use crate::grid::SpatialGrid;
use crate::ocp::{OcpBranches, OcpTable};
use crate::params::CellParameters;
use crate::timeseries::TimeSeries;

/// Sentinel cost for failed simulations; a feasibility-distance term is
/// added so the optimizer is steered back toward candidates that simulate
/// further before failing.
pub const FAILURE_PENALTY: f64 = 1e6;

/// Measured record plus the Coulomb-counting state of charge.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationDataset {
    pub record: TimeSeries,
    pub soc_cc: Vec<f64>,
}

impl IdentificationDataset {
    /// Builds from a record that already carries voltage and SOC columns.
    pub fn new(record: TimeSeries) -> Result<Self, IdError> {
        record
            .validate()
            .map_err(|e| IdError::Data(e.to_string()))?;
        if record.voltage.is_none() {
            return Err(IdError::Data("dataset needs a voltage column".into()));
        }
        let soc_cc = match &record.soc_cc {
            Some(s) => s.clone(),
            None => {
                return Err(IdError::Data(
                    "dataset needs soc_cc (or use from_coulomb_counting)".into(),
                ))
            }
        };
        Self::check_soc(&soc_cc)?;
        Ok(Self { record, soc_cc })
    }

    /// Integrates the current to produce the SOC trace: trapezoidal Coulomb
    /// counting from `soc_start` with capacity `q_ah`.
    pub fn from_coulomb_counting(
        record: TimeSeries,
        soc_start: f64,
        q_ah: f64,
    ) -> Result<Self, IdError> {
        record
            .validate()
            .map_err(|e| IdError::Data(e.to_string()))?;
        if record.voltage.is_none() {
            return Err(IdError::Data("dataset needs a voltage column".into()));
        }
        if q_ah <= 0.0 {
            return Err(IdError::Data("capacity must be positive".into()));
        }
        let mut soc = Vec::with_capacity(record.len());
        let mut acc = soc_start;
        soc.push(acc);
        for k in 1..record.len() {
            let dt = record.t[k] - record.t[k - 1];
            let i_mid = 0.5 * (record.current[k] + record.current[k - 1]);
            acc -= i_mid * dt / (3600.0 * q_ah);
            soc.push(acc);
        }
        Self::check_soc(&soc)?;
        Ok(Self {
            record,
            soc_cc: soc,
        })
    }

    fn check_soc(soc: &[f64]) -> Result<(), IdError> {
        if let Some(v) = soc.iter().find(|v| !(-0.05..=1.05).contains(*v)) {
            return Err(IdError::Data(format!(
                "Coulomb-counting SOC {v} outside [-0.05, 1.05]"
            )));
        }
        Ok(())
    }
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let ss: f64 = (0..n).map(|k| (a[k] - b[k]).powi(2)).sum();
    (ss / n as f64).sqrt()
}

/// Fresh-cell objective `w1 RMSE(V) + w2 RMSE(SOC_cc, SOC_n) +
/// w3 RMSE(SOC_cc, SOC_p)` evaluated by simulating each candidate over the
/// dataset horizon.
pub struct FreshCostProblem<'a> {
    pub base: &'a CellParameters,
    pub grid: &'a SpatialGrid,
    pub positive_ocp: &'a OcpBranches,
    pub negative_ocp: &'a OcpTable,
    pub spec: &'a ParameterSpec,
    pub dataset: &'a IdentificationDataset,
    pub weights: [f64; 3],
    pub initial_soc: f64,
    pub default_temperature: f64,
}

impl FreshCostProblem<'_> {
    /// Cost of a candidate in physical units (ordered as the spec entries).
    /// Failed simulations return the penalty sentinel, never an error.
    pub fn cost(&self, theta: &[f64]) -> f64 {
        let horizon = self.dataset.record.duration().max(f64::MIN_POSITIVE);
        let (params, r_film_offset) = match self.spec.apply(self.base, theta) {
            Ok(v) => v,
            Err(_) => return 2.0 * FAILURE_PENALTY,
        };
        let options = SimulationOptions {
            initial_soc: self.initial_soc,
            default_temperature: self.default_temperature,
            r_film_offset,
            ..Default::default()
        };
        let sim = match Simulator::new(
            &params,
            self.grid,
            self.positive_ocp,
            self.negative_ocp,
            options,
        ) {
            Ok(s) => s,
            Err(_) => return 2.0 * FAILURE_PENALTY,
        };
        match sim.simulate(&self.dataset.record) {
            Ok(out) => {
                let v_exp = self.dataset.record.voltage.as_ref().unwrap();
                self.weights[0] * rmse(v_exp, &out.voltage)
                    + self.weights[1] * rmse(&self.dataset.soc_cc, &out.soc_n)
                    + self.weights[2] * rmse(&self.dataset.soc_cc, &out.soc_p)
            }
            Err(e) => {
                let reached = match &e {
                    crate::espm::EspmError::StepFailed { time, .. } => *time,
                    _ => 0.0,
                };
                let frac = (reached / horizon).clamp(0.0, 1.0);
                FAILURE_PENALTY * (2.0 - frac)
            }
        }
    }
}

/// Pseudo-OCV record: voltage against discharged capacity.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OcvDataset {
    pub capacity_ah: Vec<f64>,
    pub voltage: Vec<f64>,
}

impl OcvDataset {
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, IdError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path.as_ref())
            .map_err(|e| IdError::Data(e.to_string()))?;
        let mut capacity_ah = Vec::new();
        let mut voltage = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (q, v) = rec.map_err(|e| IdError::Data(e.to_string()))?;
            capacity_ah.push(q);
            voltage.push(v);
        }
        if capacity_ah.len() < 2 {
            return Err(IdError::Data("OCV dataset needs at least 2 samples".into()));
        }
        Ok(Self {
            capacity_ah,
            voltage,
        })
    }
}

/// OCV-based identification of `{theta_p_100, theta_n_100, Q_n, Q_p}` with
/// the stoichiometry constraints substituted exactly:
/// `theta_n_0 = theta_n_100 - Q/Q_n` and `theta_p_0 = theta_p_100 + Q/Q_p`.
/// The simulated sweep is anchored so its first sample equals the first
/// experimental sample, enforcing the start-voltage equality by
/// construction.
pub struct OcvCostProblem<'a> {
    pub positive_ocp: &'a OcpBranches,
    pub negative_ocp: &'a OcpTable,
    pub dataset: &'a OcvDataset,
    /// Cell discharged capacity Q, Ah.
    pub q_cell_ah: f64,
}

/// The substituted window for one candidate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct OcvWindow {
    pub theta_p_100: f64,
    pub theta_n_100: f64,
    pub theta_p_0: f64,
    pub theta_n_0: f64,
    pub q_n_ah: f64,
    pub q_p_ah: f64,
}

impl OcvCostProblem<'_> {
    /// Applies the equality constraints to a candidate
    /// `[theta_p_100, theta_n_100, q_n_ah, q_p_ah]`.
    pub fn window(&self, vartheta: &[f64]) -> Result<OcvWindow, IdError> {
        let (theta_p_100, theta_n_100, q_n, q_p) =
            (vartheta[0], vartheta[1], vartheta[2], vartheta[3]);
        if q_n <= 0.0 || q_p <= 0.0 {
            return Err(IdError::InfeasibleWindow(
                "electrode capacities must be positive".into(),
            ));
        }
        let theta_n_0 = theta_n_100 - self.q_cell_ah / q_n;
        let theta_p_0 = theta_p_100 + self.q_cell_ah / q_p;
        for (name, v) in [
            ("theta_p_100", theta_p_100),
            ("theta_n_100", theta_n_100),
            ("theta_p_0", theta_p_0),
            ("theta_n_0", theta_n_0),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(IdError::InfeasibleWindow(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(OcvWindow {
            theta_p_100,
            theta_n_100,
            theta_p_0,
            theta_n_0,
            q_n_ah: q_n,
            q_p_ah: q_p,
        })
    }

    /// Simulated OCV at each experimental capacity sample, anchored at the
    /// first experimental voltage.
    pub fn sweep(&self, window: &OcvWindow) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dataset.capacity_ah.len());
        for &q in &self.dataset.capacity_ah {
            let theta_n = window.theta_n_100 - q / window.q_n_ah;
            let theta_p = window.theta_p_100 + q / window.q_p_ah;
            let (u_p, _) = self.positive_ocp.eval(theta_p);
            let (u_n, _) = self.negative_ocp.eval(theta_n);
            out.push(u_p - u_n);
        }
        let anchor = self.dataset.voltage[0] - out[0];
        for v in out.iter_mut() {
            *v += anchor;
        }
        out
    }

    /// RMSE between the anchored sweep and the experimental pseudo-OCV.
    pub fn cost_checked(&self, vartheta: &[f64]) -> Result<f64, IdError> {
        let window = self.window(vartheta)?;
        let sim = self.sweep(&window);
        Ok(rmse(&sim, &self.dataset.voltage))
    }

    /// Penalized form for use inside the optimizer.
    pub fn cost(&self, vartheta: &[f64]) -> f64 {
        match self.cost_checked(vartheta) {
            Ok(c) => c,
            Err(_) => FAILURE_PENALTY,
        }
    }
}
