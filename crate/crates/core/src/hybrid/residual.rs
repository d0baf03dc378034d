//! Residual dataset construction: align an experimental record with the
//! physics simulation, emit hysteresis features and `V_exp - V_cs` targets.

use thiserror::Error;

use crate::espm::SimulationOutput;
use crate::timeseries::TimeSeries;

#[derive(Debug, Error, PartialEq)]
pub enum ResidualError {
    #[error("experimental record has no voltage column")]
    NoVoltage,
    #[error("record and simulation misaligned: {0}")]
    Misaligned(String),
}

/// Feature schema of the hysteresis model: the experimental current plus the
/// simulated signal vector.
pub const HYSTERESIS_FEATURE_NAMES: [&str; 10] = [
    "current",
    "soc_n",
    "soc_p",
    "r_p_frac",
    "theta_surf_p",
    "theta_surf_n",
    "v_cs",
    "eta_p",
    "eta_n",
    "delta_phi_e",
];

/// One feature row per simulated sample (nothing dropped); the experimental
/// current is taken per sample from `current`.
pub fn hysteresis_features(current: &[f64], sim: &SimulationOutput) -> Vec<Vec<f64>> {
    (0..sim.len())
        .map(|k| {
            let r_p_frac = sim.r_p_frac.as_ref().map(|c| c[k]).unwrap_or(1.0);
            vec![
                current[k],
                sim.soc_n[k],
                sim.soc_p[k],
                r_p_frac,
                sim.theta_surf_p[k],
                sim.theta_surf_n[k],
                sim.voltage[k],
                sim.eta_p[k],
                sim.eta_n[k],
                sim.delta_phi_e[k],
            ]
        })
        .collect()
}

/// Builds aligned (features, residual target) pairs, dropping samples the
/// simulation flagged as OCP extrapolation. Requires sample-for-sample time
/// alignment within one sample period.
pub fn build_residual_dataset(
    exp: &TimeSeries,
    sim: &SimulationOutput,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), ResidualError> {
    let v_exp = exp.voltage.as_ref().ok_or(ResidualError::NoVoltage)?;
    if exp.len() != sim.len() {
        return Err(ResidualError::Misaligned(format!(
            "{} experimental samples vs {} simulated",
            exp.len(),
            sim.len()
        )));
    }
    let period = if exp.len() > 1 {
        (exp.t[exp.len() - 1] - exp.t[0]) / (exp.len() - 1) as f64
    } else {
        f64::INFINITY
    };
    for k in 0..sim.len() {
        if (exp.t[k] - sim.t[k]).abs() > period {
            return Err(ResidualError::Misaligned(format!(
                "sample {k}: t_exp = {} vs t_sim = {}",
                exp.t[k], sim.t[k]
            )));
        }
    }
    let all = hysteresis_features(&exp.current, sim);
    let mut x = Vec::with_capacity(sim.len());
    let mut y = Vec::with_capacity(sim.len());
    for (k, row) in all.into_iter().enumerate() {
        if sim.extrapolated[k] {
            continue;
        }
        x.push(row);
        y.push(v_exp[k] - sim.voltage[k]);
    }
    Ok((x, y))
}

/// Hybrid output `V = V_cs + V_h`; with no hysteresis model loaded the
/// compensation is zero and the output is the physics voltage.
pub fn hybrid_voltage(v_cs: f64, v_h: f64) -> f64 {
    v_cs + v_h
}
