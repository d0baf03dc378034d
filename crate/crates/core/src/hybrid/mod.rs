//! Hybrid physics + learned-hysteresis voltage model: regression trees or a
//! random forest trained on the residual between measured voltage and the
//! core-shell physics voltage, composed as `V = V_cs + V_h` at inference.

pub mod forest;
pub mod residual;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{forest_fit, forest_predict, ForestOptions, RandomForest};
pub use residual::{
    build_residual_dataset, hybrid_voltage, hysteresis_features, ResidualError,
    HYSTERESIS_FEATURE_NAMES,
};
pub use tree::{tree_fit, tree_predict, RegressionTree, TreeOptions};

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("residual dataset: {0}")]
    Residual(#[from] ResidualError),
    #[error("artifact: {0}")]
    Artifact(String),
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    FeatureMismatch { expected: usize, got: usize },
}

pub const HYSTERESIS_ARTIFACT_VERSION: u32 = 1;

/// A trained hysteresis compensator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum HysteresisModel {
    Tree(RegressionTree),
    Forest(RandomForest),
}

impl HysteresisModel {
    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        match self {
            HysteresisModel::Tree(t) => tree_predict(t, x),
            HysteresisModel::Forest(f) => forest_predict(f, x),
        }
    }
}

/// JSON artifact: node arrays plus the feature schema they were trained on.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HysteresisArtifact {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub model: HysteresisModel,
}

pub fn save_hysteresis(model: &HysteresisModel, path: impl AsRef<Path>) -> Result<(), HybridError> {
    let artifact = HysteresisArtifact {
        version: HYSTERESIS_ARTIFACT_VERSION,
        feature_names: HYSTERESIS_FEATURE_NAMES
            .iter()
            .map(|s| s.to_string())
            .collect(),
        model: model.clone(),
    };
    let json = serde_json::to_string_pretty(&artifact)
        .map_err(|e| HybridError::Artifact(e.to_string()))?;
    std::fs::write(path.as_ref(), json).map_err(|e| HybridError::Artifact(e.to_string()))
}

pub fn load_hysteresis(path: impl AsRef<Path>) -> Result<HysteresisModel, HybridError> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| HybridError::Artifact(e.to_string()))?;
    let artifact: HysteresisArtifact =
        serde_json::from_str(&text).map_err(|e| HybridError::Artifact(e.to_string()))?;
    if artifact.version != HYSTERESIS_ARTIFACT_VERSION {
        return Err(HybridError::Artifact(format!(
            "unsupported artifact version {}",
            artifact.version
        )));
    }
    if artifact.feature_names.len() != HYSTERESIS_FEATURE_NAMES.len() {
        return Err(HybridError::FeatureMismatch {
            expected: HYSTERESIS_FEATURE_NAMES.len(),
            got: artifact.feature_names.len(),
        });
    }
    Ok(artifact.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_round_trip() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                (0..HYSTERESIS_FEATURE_NAMES.len())
                    .map(|j| ((i * 7 + j * 3) % 13) as f64)
                    .collect()
            })
            .collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).sin()).collect();
        let model = HysteresisModel::Forest(forest_fit(
            &x,
            &y,
            ForestOptions {
                trees: 5,
                ..Default::default()
            },
            3,
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hyst.json");
        save_hysteresis(&model, &path).unwrap();
        let back = load_hysteresis(&path).unwrap();
        assert_eq!(back.predict(&x), model.predict(&x));
    }

    #[test]
    fn in_sample_tree_residual_fit_never_hurts() {
        // fitting the residual reduces in-sample RMSE relative to zero
        // compensation
        let n = 200;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = vec![0.0; HYSTERESIS_FEATURE_NAMES.len()];
                row[0] = if i % 2 == 0 { 1.0 } else { -1.0 }; // current sign
                row[1] = i as f64 / n as f64;
                row
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 0.015 * r[0].signum()).collect();
        let tree = tree_fit(&x, &y, TreeOptions::default());
        let pred = tree_predict(&tree, &x);
        let rmse_before = (y.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let rmse_after = (y
            .iter()
            .zip(&pred)
            .map(|(t, p)| (t - p).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        assert!(rmse_after <= rmse_before);
        assert!(rmse_after < 1e-10, "sign pattern is exactly learnable");
    }
}
