//! Model artifact serialization: a versioned JSON description plus a binary
//! blob holding the training matrix and bootstrap index lists. Loading
//! rebuilds every ensemble member from its stored hyperparameters without
//! re-running the marginal-likelihood search.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bagging::{BaggedEnsemble, Normalization};
use super::gp::{GpHyperparameters, GpModel};
use super::segment::SegmentOptions;
use super::{SohError, SohModel};

pub const ARTIFACT_VERSION: u32 = 1;
const BLOB_MAGIC: &[u8; 4] = b"CBGP";

#[derive(Debug, Serialize, Deserialize)]
struct ArtifactJson {
    version: u32,
    feature_names: Vec<String>,
    selected: Vec<usize>,
    q_nom_ah: f64,
    seed: u64,
    bootstrap: bool,
    segment: SegmentOptions,
    normalization: Normalization,
    member_hyperparameters: Vec<GpHyperparameters>,
    member_seeds: Vec<u64>,
    /// SHA-256 of the sibling blob file, hex.
    training_digest: String,
    blob_file: String,
}

fn blob_bytes(model: &SohModel) -> Vec<u8> {
    let n = model.x_train.len();
    let d = model.x_train.first().map_or(0, |r| r.len());
    let b = model.ensemble.member_indices.len();
    let mut buf = Vec::with_capacity(4 + 4 + 24 + 8 * (n * d + n) + 8 * b * n);
    buf.extend_from_slice(BLOB_MAGIC);
    buf.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u64).to_le_bytes());
    buf.extend_from_slice(&(b as u64).to_le_bytes());
    for row in &model.x_train {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in &model.y_train {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for indices in &model.ensemble.member_indices {
        for &i in indices {
            buf.extend_from_slice(&(i as u64).to_le_bytes());
        }
    }
    buf
}

fn digest_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes `model.json` and its sibling `.bin` blob.
pub fn save_model(model: &SohModel, json_path: impl AsRef<Path>) -> Result<(), SohError> {
    let json_path = json_path.as_ref();
    let blob_path = json_path.with_extension("bin");
    let blob = blob_bytes(model);
    let doc = ArtifactJson {
        version: ARTIFACT_VERSION,
        feature_names: model.feature_names.clone(),
        selected: model.selected.clone(),
        q_nom_ah: model.q_nom_ah,
        seed: model.seed,
        bootstrap: model.ensemble.bootstrap,
        segment: model.segment.clone(),
        normalization: model.ensemble.norm.clone(),
        member_hyperparameters: model
            .ensemble
            .members
            .iter()
            .map(|m| m.hyper.clone())
            .collect(),
        member_seeds: model.ensemble.member_seeds.clone(),
        training_digest: digest_hex(&blob),
        blob_file: blob_path
            .file_name()
            .unwrap()
            .to_string_lossy()
            .into_owned(),
    };
    std::fs::File::create(&blob_path)
        .and_then(|mut f| f.write_all(&blob))
        .map_err(|e| SohError::Artifact(format!("writing blob: {e}")))?;
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| SohError::Artifact(format!("encoding json: {e}")))?;
    std::fs::write(json_path, json)
        .map_err(|e| SohError::Artifact(format!("writing json: {e}")))?;
    Ok(())
}

/// Loads and verifies an artifact, rebuilding the ensemble members.
pub fn load_model(json_path: impl AsRef<Path>) -> Result<SohModel, SohError> {
    let json_path = json_path.as_ref();
    let text = std::fs::read_to_string(json_path)
        .map_err(|e| SohError::Artifact(format!("reading json: {e}")))?;
    let doc: ArtifactJson = serde_json::from_str(&text)
        .map_err(|e| SohError::Artifact(format!("parsing json: {e}")))?;
    if doc.version != ARTIFACT_VERSION {
        return Err(SohError::Artifact(format!(
            "unsupported artifact version {}",
            doc.version
        )));
    }
    let blob_path = json_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&doc.blob_file);
    let mut blob = Vec::new();
    std::fs::File::open(&blob_path)
        .and_then(|mut f| f.read_to_end(&mut blob))
        .map_err(|e| SohError::Artifact(format!("reading blob: {e}")))?;
    if digest_hex(&blob) != doc.training_digest {
        return Err(SohError::Artifact("training data digest mismatch".into()));
    }

    // decode the blob
    let fail = || SohError::Artifact("truncated blob".into());
    if blob.len() < 32 || &blob[0..4] != BLOB_MAGIC {
        return Err(SohError::Artifact("bad blob magic".into()));
    }
    let mut off = 8; // magic + version
    let mut read_u64 = |blob: &[u8]| -> Result<u64, SohError> {
        let end = off + 8;
        let v = blob
            .get(off..end)
            .map(|s| u64::from_le_bytes(s.try_into().unwrap()))
            .ok_or_else(fail)?;
        off = end;
        Ok(v)
    };
    let n = read_u64(&blob)? as usize;
    let d = read_u64(&blob)? as usize;
    let b = read_u64(&blob)? as usize;
    let need = 32 + 8 * (n * d + n + b * n);
    if blob.len() != need {
        return Err(fail());
    }
    let mut floats = blob[32..32 + 8 * (n * d + n)]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let x_train: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| floats.next().unwrap()).collect())
        .collect();
    let y_train: Vec<f64> = (0..n).map(|_| floats.next().unwrap()).collect();
    let member_indices: Vec<Vec<usize>> = blob[32 + 8 * (n * d + n)..]
        .chunks_exact(8 * n)
        .map(|chunk| {
            chunk
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
                .collect()
        })
        .collect();
    if member_indices.len() != b || doc.member_hyperparameters.len() != b {
        return Err(SohError::Artifact("member count mismatch".into()));
    }

    let xn = doc.normalization.normalize_x(&x_train);
    let yn = doc.normalization.normalize_y(&y_train);
    let mut members = Vec::with_capacity(b);
    for (hyper, indices) in doc.member_hyperparameters.iter().zip(&member_indices) {
        let xb: Vec<Vec<f64>> = indices.iter().map(|&i| xn[i].clone()).collect();
        let yb: Vec<f64> = indices.iter().map(|&i| yn[i]).collect();
        members.push(
            GpModel::from_parts(hyper.clone(), xb, yb)
                .map_err(|e| SohError::Artifact(format!("rebuilding member: {e}")))?,
        );
    }

    Ok(SohModel {
        ensemble: BaggedEnsemble {
            members,
            member_seeds: doc.member_seeds,
            member_indices,
            norm: doc.normalization,
            bootstrap: doc.bootstrap,
        },
        selected: doc.selected,
        feature_names: doc.feature_names,
        q_nom_ah: doc.q_nom_ah,
        seed: doc.seed,
        segment: doc.segment,
        x_train,
        y_train,
    })
}
