//! Window featurization: six statistics per feature window (CC voltage and
//! CV current), twelve features total. The schema is the artifact contract
//! and is versioned with trained models.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::segment::ChargeSegment;
use crate::numeric::{ls_slope, trapezoid};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("features {0:?} are missing (empty window)")]
    Missing(Vec<String>),
}

pub const FEATURES_PER_WINDOW: usize = 6;

/// Feature names in schema order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(2 * FEATURES_PER_WINDOW);
    for window in ["cc_v", "cv_i"] {
        for stat in ["mean", "slope", "curvature", "iqr", "delta", "integral"] {
            names.push(format!("{window}_{stat}"));
        }
    }
    names
}

/// A fixed-length attribute vector; entries from an empty window are
/// missing-feature markers.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<Option<f64>>,
    pub names: Vec<String>,
}

impl FeatureVector {
    /// Dense values; errors listing the missing names when any marker is
    /// present.
    pub fn dense(&self) -> Result<Vec<f64>, FeatureError> {
        let missing: Vec<String> = self
            .values
            .iter()
            .zip(&self.names)
            .filter(|(v, _)| v.is_none())
            .map(|(_, n)| n.clone())
            .collect();
        if !missing.is_empty() {
            return Err(FeatureError::Missing(missing));
        }
        Ok(self.values.iter().map(|v| v.unwrap()).collect())
    }
}

fn window_stats(t: &[f64], y: &[f64]) -> [f64; FEATURES_PER_WINDOW] {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let slope = ls_slope(t, y);
    let curvature = if n >= 3 {
        (2..n)
            .map(|i| y[i] - 2.0 * y[i - 1] + y[i - 2])
            .sum::<f64>()
            / (n - 2) as f64
    } else {
        0.0
    };
    let iqr = {
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        quantile(&sorted, 0.75) - quantile(&sorted, 0.25)
    };
    let delta = y[n - 1] - y[0];
    let integral = trapezoid(t, y);
    [mean, slope, curvature, iqr, delta, integral]
}

/// Linear-interpolated quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Computes the 12-feature schema from a segment. Empty windows propagate
/// as missing-feature markers rather than errors.
pub fn extract_features(segment: &ChargeSegment) -> FeatureVector {
    let names = feature_names();
    let mut values: Vec<Option<f64>> = Vec::with_capacity(names.len());
    if segment.cc_voltage.is_empty() {
        values.extend(std::iter::repeat_n(None, FEATURES_PER_WINDOW));
    } else {
        values.extend(
            window_stats(&segment.cc_time, &segment.cc_voltage)
                .into_iter()
                .map(Some),
        );
    }
    if segment.cv_current.is_empty() {
        values.extend(std::iter::repeat_n(None, FEATURES_PER_WINDOW));
    } else {
        values.extend(
            window_stats(&segment.cv_time, &segment.cv_current)
                .into_iter()
                .map(Some),
        );
    }
    FeatureVector { values, names }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soh::segment::SegmentMeta;
    use approx::assert_relative_eq;

    fn segment(cc: (Vec<f64>, Vec<f64>), cv: (Vec<f64>, Vec<f64>)) -> ChargeSegment {
        let cv_missing = cv.1.is_empty();
        ChargeSegment {
            cc_time: cc.0,
            cc_voltage: cc.1,
            cv_time: cv.0,
            cv_current: cv.1,
            cv_missing,
            meta: SegmentMeta::default(),
        }
    }

    #[test]
    fn constant_window_statistics() {
        let t: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let v = vec![3.6; 50];
        let seg = segment((t.clone(), v), (t, vec![-0.5; 50]));
        let f = extract_features(&seg);
        let dense = f.dense().unwrap();
        assert_relative_eq!(dense[0], 3.6, epsilon = 1e-12); // mean
        assert_relative_eq!(dense[1], 0.0, epsilon = 1e-12); // slope
        assert_relative_eq!(dense[4], 0.0, epsilon = 1e-12); // delta
    }

    #[test]
    fn linear_ramp_slope_exact() {
        let t: Vec<f64> = (0..100).map(|k| 2.0 * k as f64).collect();
        let v: Vec<f64> = t.iter().map(|&tk| 3.4 + 6.5e-4 * tk).collect();
        let seg = segment((t.clone(), v), (t.clone(), vec![-0.2; t.len()]));
        let dense = extract_features(&seg).dense().unwrap();
        assert_relative_eq!(dense[1], 6.5e-4, epsilon = 1e-9);
    }

    #[test]
    fn exponential_decay_integral_matches_closed_form() {
        let dt = 0.05;
        let tau = 120.0;
        let t_end = 600.0;
        let n = (t_end / dt) as usize;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let i: Vec<f64> = t.iter().map(|&tk| -(-tk / tau).exp()).collect();
        let seg = segment((t.clone(), vec![4.1; t.len()]), (t, i));
        let dense = extract_features(&seg).dense().unwrap();
        let analytic = -tau * (1.0 - (-t_end / tau).exp());
        let integral = dense[11];
        assert!(
            ((integral - analytic) / analytic).abs() < 1e-3,
            "integral {integral} vs analytic {analytic}"
        );
    }

    #[test]
    fn empty_cv_propagates_markers() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let seg = segment((t, vec![3.6; 10]), (vec![], vec![]));
        let f = extract_features(&seg);
        assert!(f.values[6..].iter().all(|v| v.is_none()));
        let err = f.dense().unwrap_err();
        assert!(matches!(err, FeatureError::Missing(ref names) if names.len() == 6));
    }
}
