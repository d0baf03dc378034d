//! Open-circuit potential tables.
//!
//! One table per electrode; the LFP positive electrode carries separate
//! charge and discharge branches whose mean is the averaged potential used
//! by the core-shell model. Tables interchange as two-column CSV
//! (stoichiometry, volts).

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::numeric::interp_clamped;

#[derive(Debug, Error)]
pub enum OcpError {
    #[error("OCP table needs at least 2 breakpoints, got {0}")]
    TooShort(usize),
    #[error("OCP breakpoints must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("OCP table contains a non-finite entry at index {0}")]
    NotFinite(usize),
    #[error("failed to read OCP csv: {0}")]
    Io(#[from] io::Error),
    #[error("OCP csv parse error: {0}")]
    Csv(#[from] csv::Error),
}

/// Monotone stoichiometry -> potential lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpTable {
    theta: Vec<f64>,
    volts: Vec<f64>,
}

impl OcpTable {
    pub fn new(theta: Vec<f64>, volts: Vec<f64>) -> Result<Self, OcpError> {
        if theta.len() < 2 || theta.len() != volts.len() {
            return Err(OcpError::TooShort(theta.len().min(volts.len())));
        }
        for i in 0..theta.len() {
            if !theta[i].is_finite() || !volts[i].is_finite() {
                return Err(OcpError::NotFinite(i));
            }
            if i > 0 && theta[i] <= theta[i - 1] {
                return Err(OcpError::NotIncreasing(i));
            }
        }
        Ok(Self { theta, volts })
    }

    /// Samples a closed-form curve on a uniform grid.
    pub fn from_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Self {
        let theta: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let volts = theta.iter().map(|&t| f(t)).collect();
        Self::new(theta, volts).expect("generated table is monotone by construction")
    }

    /// Potential at stoichiometry `theta`; the flag reports clamped
    /// extrapolation outside the table domain.
    pub fn eval(&self, theta: f64) -> (f64, bool) {
        interp_clamped(&self.theta, &self.volts, theta)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.theta[0], *self.theta.last().unwrap())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, OcpError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_path(path.as_ref())?;
        let mut theta = Vec::new();
        let mut volts = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (t, v) = rec?;
            theta.push(t);
            volts.push(v);
        }
        Self::new(theta, volts)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), OcpError> {
        let mut wtr = csv::Writer::from_path(path.as_ref())?;
        wtr.write_record(["theta", "volts"])?;
        for (t, v) in self.theta.iter().zip(&self.volts) {
            wtr.write_record([t.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Positive-electrode potential: either a single curve or a charge/discharge
/// branch pair (LFP hysteresis).
#[derive(Debug, Clone, PartialEq)]
pub enum OcpBranches {
    Single(OcpTable),
    Hysteretic {
        charge: OcpTable,
        discharge: OcpTable,
    },
}

impl OcpBranches {
    /// Potential used by the standard (single-branch) voltage assembly.
    /// For a hysteretic pair this is the branch mean.
    pub fn eval(&self, theta: f64) -> (f64, bool) {
        match self {
            OcpBranches::Single(t) => t.eval(theta),
            OcpBranches::Hysteretic { charge, discharge } => {
                let (uc, ec) = charge.eval(theta);
                let (ud, ed) = discharge.eval(theta);
                (0.5 * (uc + ud), ec || ed)
            }
        }
    }
}

/// Graphite negative-electrode potential (standard empirical fit), V.
pub fn graphite_ocp(theta: f64) -> f64 {
    0.6379 + 0.5416 * (-305.5309 * theta).exp() + 0.044 * (-(theta - 0.1958) / 0.1088).tanh()
        - 0.1978 * ((theta - 1.0571) / 0.0854).tanh()
        - 0.6875 * ((theta + 0.0117) / 0.0529).tanh()
        - 0.0175 * ((theta - 0.5692) / 0.0875).tanh()
}

/// NMC positive-electrode potential (standard empirical fit), V.
pub fn nmc_ocp(theta: f64) -> f64 {
    -0.8090 * theta + 4.4875
        - 0.0428 * (18.5138 * (theta - 0.5542)).tanh()
        - 17.7326 * (15.7890 * (theta - 0.3117)).tanh()
        + 17.5842 * (15.9308 * (theta - 0.3120)).tanh()
}

/// LFP positive-electrode equilibrium potential (standard empirical fit), V.
pub fn lfp_ocp(theta: f64) -> f64 {
    let y = 1.0 - theta;
    3.4323
        - 0.8428 * (-80.2493 * y.powf(1.3198)).exp()
        - 3.2474e-6 * (20.2645 * y.powf(3.8003)).exp()
        + 3.2482e-6 * (20.2646 * y.powf(3.7995)).exp()
}

/// Hysteresis half-gap applied to the LFP equilibrium curve to produce the
/// charge/discharge branch pair, V.
pub const LFP_BRANCH_HALF_GAP: f64 = 0.015;

/// Default graphite table over the usable stoichiometry range.
pub fn default_negative_table() -> OcpTable {
    OcpTable::from_fn(graphite_ocp, 0.005, 0.995, 400)
}

/// Default NMC table.
pub fn default_nmc_table() -> OcpTable {
    OcpTable::from_fn(nmc_ocp, 0.20, 0.995, 400)
}

/// Default LFP branch pair (equilibrium curve +/- the half-gap).
pub fn default_lfp_branches() -> OcpBranches {
    OcpBranches::Hysteretic {
        charge: OcpTable::from_fn(|t| lfp_ocp(t) + LFP_BRANCH_HALF_GAP, 0.01, 0.99, 400),
        discharge: OcpTable::from_fn(|t| lfp_ocp(t) - LFP_BRANCH_HALF_GAP, 0.01, 0.99, 400),
    }
}
