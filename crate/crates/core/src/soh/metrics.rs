//! State-of-health arithmetic and regression error metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("vectors must have equal nonzero length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("nominal capacity must be positive, got {0}")]
    BadNominal(f64),
    #[error("percentage metric undefined: target at index {0} is zero")]
    ZeroTarget(usize),
}

/// SOH in percent: `Q / Q_nom * 100`.
pub fn soh(q_ah: f64, q_nom_ah: f64) -> Result<f64, MetricError> {
    if q_nom_ah <= 0.0 {
        return Err(MetricError::BadNominal(q_nom_ah));
    }
    Ok(q_ah / q_nom_ah * 100.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ErrorMetrics {
    pub rmse: f64,
    /// Root mean squared percentage error, %.
    pub rmspe: f64,
    /// Maximum absolute percentage error, %.
    pub mape: f64,
}

/// Computes RMSE, RMSPE, and the maximum absolute percentage error over
/// paired vectors. Percentage metrics guard against zero targets.
pub fn error_metrics(y: &[f64], yhat: &[f64]) -> Result<ErrorMetrics, MetricError> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(MetricError::LengthMismatch(y.len(), yhat.len()));
    }
    let n = y.len() as f64;
    let mut ss = 0.0;
    let mut ssp = 0.0;
    let mut max_ape = 0.0f64;
    for (k, (&t, &p)) in y.iter().zip(yhat).enumerate() {
        let e = t - p;
        ss += e * e;
        if t == 0.0 {
            return Err(MetricError::ZeroTarget(k));
        }
        let pe = e / t * 100.0;
        ssp += pe * pe;
        max_ape = max_ape.max(pe.abs());
    }
    Ok(ErrorMetrics {
        rmse: (ss / n).sqrt(),
        rmspe: (ssp / n).sqrt(),
        mape: max_ape,
    })
}
