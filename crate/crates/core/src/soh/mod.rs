//! Data-driven state-of-health estimation: charge-segment featurization,
//! feature ranking, bagged Gaussian process regression, and error metrics,
//! assembled into a train/predict/evaluate pipeline.

pub mod artifact;
pub mod bagging;
pub mod features;
pub mod gp;
pub mod metrics;
pub mod mrmr;
pub mod segment;
pub mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bagging::{bag_fit, bag_predict, BagOptions, BaggedEnsemble, Normalization};
pub use features::{extract_features, feature_names, FeatureVector};
pub use gp::{gp_fit, gp_predict, GpHyperparameters, GpModel, GpOptions};
pub use metrics::{error_metrics, soh, ErrorMetrics};
pub use mrmr::mrmr_rank;
pub use segment::{segment_charge, ChargeSegment, SegmentMeta, SegmentOptions};
pub use synthetic::{synthetic_cycling, CyclingDataset, SyntheticCyclingSpec};

use crate::seeds;

#[derive(Debug, Error)]
pub enum SohError {
    #[error("segmentation: {0}")]
    Segment(#[from] segment::SegmentError),
    #[error("features: {0}")]
    Feature(#[from] features::FeatureError),
    #[error("feature ranking: {0}")]
    Mrmr(#[from] mrmr::MrmrError),
    #[error("ensemble: {0}")]
    Bagging(#[from] bagging::BaggingError),
    #[error("metrics: {0}")]
    Metric(#[from] metrics::MetricError),
    #[error("no usable training cycles ({0})")]
    NoTrainingData(String),
    #[error("artifact: {0}")]
    Artifact(String),
}

/// Feature matrix extracted from a cycling dataset. Cycles whose segmentation
/// or featurization failed are reported, not silently dropped.
#[derive(Debug, Clone)]
pub struct FeaturizedCycles {
    pub x: Vec<Vec<f64>>,
    /// SOH targets in percent; `None` when the cycle has no measured
    /// capacity.
    pub target: Vec<Option<f64>>,
    pub cycle_index: Vec<u32>,
    pub names: Vec<String>,
    pub skipped: Vec<(u32, String)>,
}

/// Runs segmentation and feature extraction over every cycle.
pub fn featurize_cycles(
    dataset: &CyclingDataset,
    opts: &SegmentOptions,
    q_nom_ah: f64,
) -> FeaturizedCycles {
    let mut out = FeaturizedCycles {
        x: Vec::new(),
        target: Vec::new(),
        cycle_index: Vec::new(),
        names: feature_names(),
        skipped: Vec::new(),
    };
    for cycle in &dataset.cycles {
        let meta = SegmentMeta {
            cell_id: String::new(),
            cycle_index: cycle.cycle_index,
            temperature: cycle.temperature,
        };
        let seg = match segment_charge(&cycle.record, opts, meta) {
            Ok(s) => s,
            Err(e) => {
                out.skipped.push((cycle.cycle_index, e.to_string()));
                continue;
            }
        };
        let dense = match extract_features(&seg).dense() {
            Ok(d) => d,
            Err(e) => {
                out.skipped.push((cycle.cycle_index, e.to_string()));
                continue;
            }
        };
        out.x.push(dense);
        out.target
            .push(cycle.q_measured_ah.map(|q| q / q_nom_ah * 100.0));
        out.cycle_index.push(cycle.cycle_index);
    }
    out
}

#[derive(Debug, Clone)]
pub struct SohTrainOptions {
    pub segment: SegmentOptions,
    pub q_nom_ah: f64,
    pub bags: usize,
    /// Keep the top-k ranked features; 0 keeps the full schema.
    pub top_k: usize,
    pub seed: u64,
    pub bag: BagOptions,
}

impl Default for SohTrainOptions {
    fn default() -> Self {
        Self {
            segment: SegmentOptions::default(),
            q_nom_ah: 3.0,
            bags: 10,
            top_k: 0,
            seed: 0,
            bag: BagOptions::default(),
        }
    }
}

/// A trained SOH estimator: the ensemble plus everything needed to apply it
/// to new cycles and to serialize it.
#[derive(Debug, Clone)]
pub struct SohModel {
    pub ensemble: BaggedEnsemble,
    /// Indices into the full feature schema, in mRMR selection order.
    pub selected: Vec<usize>,
    pub feature_names: Vec<String>,
    pub q_nom_ah: f64,
    pub seed: u64,
    pub segment: SegmentOptions,
    /// Full training matrix in original units (selected columns only).
    pub x_train: Vec<Vec<f64>>,
    pub y_train: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SohPrediction {
    pub cycle_index: u32,
    pub soh_mean: f64,
    pub soh_std: f64,
}

/// Trains the bagged estimator on every cycle carrying a measured capacity.
pub fn train_soh_model(
    dataset: &CyclingDataset,
    opts: &SohTrainOptions,
) -> Result<SohModel, SohError> {
    let feats = featurize_cycles(dataset, &opts.segment, opts.q_nom_ah);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (row, target) in feats.x.iter().zip(&feats.target) {
        if let Some(t) = target {
            x.push(row.clone());
            y.push(*t);
        }
    }
    if x.len() < 4 {
        return Err(SohError::NoTrainingData(format!(
            "{} labelled cycles after segmentation ({} skipped)",
            x.len(),
            feats.skipped.len()
        )));
    }

    let selected = if opts.top_k > 0 && opts.top_k < feats.names.len() {
        mrmr_rank(&x, &y, opts.top_k)?
    } else {
        (0..feats.names.len()).collect()
    };
    let x_sel: Vec<Vec<f64>> = x
        .iter()
        .map(|row| selected.iter().map(|&j| row[j]).collect())
        .collect();

    let ensemble = bag_fit(
        &x_sel,
        &y,
        opts.bags,
        seeds::subseed(opts.seed, seeds::streams::BOOTSTRAP),
        &opts.bag,
    )?;
    Ok(SohModel {
        ensemble,
        selected,
        feature_names: feats.names,
        q_nom_ah: opts.q_nom_ah,
        seed: opts.seed,
        segment: opts.segment.clone(),
        x_train: x_sel,
        y_train: y,
    })
}

/// Predicts SOH (mean and one-sigma bound, percent) for every cycle whose
/// features extract cleanly.
pub fn predict_soh(
    model: &SohModel,
    dataset: &CyclingDataset,
) -> Result<Vec<SohPrediction>, SohError> {
    let feats = featurize_cycles(dataset, &model.segment, model.q_nom_ah);
    if feats.x.is_empty() {
        return Err(SohError::NoTrainingData(format!(
            "no cycle featurized ({} skipped)",
            feats.skipped.len()
        )));
    }
    let x_sel: Vec<Vec<f64>> = feats
        .x
        .iter()
        .map(|row| model.selected.iter().map(|&j| row[j]).collect())
        .collect();
    let (mean, var) = bag_predict(&model.ensemble, &x_sel);
    Ok(feats
        .cycle_index
        .iter()
        .zip(mean.iter().zip(&var))
        .map(|(&cycle_index, (&m, &v))| SohPrediction {
            cycle_index,
            soh_mean: m,
            soh_std: v.sqrt(),
        })
        .collect())
}

/// Predicts, then scores against the measured capacities present in the
/// dataset.
pub fn evaluate_soh(
    model: &SohModel,
    dataset: &CyclingDataset,
) -> Result<(Vec<SohPrediction>, ErrorMetrics), SohError> {
    let predictions = predict_soh(model, dataset)?;
    let mut y = Vec::new();
    let mut yhat = Vec::new();
    for p in &predictions {
        if let Some(cycle) = dataset
            .cycles
            .iter()
            .find(|c| c.cycle_index == p.cycle_index)
        {
            if let Some(q) = cycle.q_measured_ah {
                y.push(q / model.q_nom_ah * 100.0);
                yhat.push(p.soh_mean);
            }
        }
    }
    let metrics = error_metrics(&y, &yhat)?;
    Ok((predictions, metrics))
}
