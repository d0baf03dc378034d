//! Run manifest: reproducible digests of the configuration and input files,
//! plus the outputs a run produced. Written atomically at run end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use cellbench_core::config::WorkbenchConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub subcommand: String,
    pub version: String,
    /// Digest of the parsed configuration (semantic content, not bytes).
    pub config_digest: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    pub finished_at: String,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let data = std::fs::read(path).with_context(|| format!("digesting {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&data);
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex(&hasher.finalize()),
    })
}

/// Digest of the parsed configuration: whitespace, comments, and key order
/// in the TOML file do not affect it; any semantic change does.
pub fn config_digest(config: &WorkbenchConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    hex(&hasher.finalize())
}

/// Collects outputs while a subcommand runs, then writes the manifest.
pub struct ManifestBuilder {
    subcommand: String,
    config_digest: String,
    seed: u64,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, config: &WorkbenchConfig, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config_digest: config_digest(config),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(file_digest(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Verifies every declared output exists, then writes
    /// `manifest.json` atomically (temp file + rename).
    pub fn finish(self, out_dir: &Path) -> Result<()> {
        for out in &self.outputs {
            if !out.exists() {
                anyhow::bail!("declared output missing: {}", out.display());
            }
        }
        let manifest = RunManifest {
            run_id: format!(
                "{}-{}",
                chrono::Utc::now().format("%Y%m%dT%H%M%S"),
                &self.config_digest[..8]
            ),
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: self.config_digest,
            seed: self.seed,
            inputs: self.inputs,
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            finished_at: chrono::Utc::now().to_rfc3339(),
        };
        let path = out_dir.join("manifest.json");
        let tmp = out_dir.join(".manifest.json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(&manifest)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cellbench_core::grid::SpatialGrid;
    use cellbench_core::params::CellParameters;

    fn config() -> WorkbenchConfig {
        use cellbench_core::config::*;
        WorkbenchConfig {
            seed: 1,
            cell: CellParameters::default_nmc(),
            grid: SpatialGrid::new(5, 4, 3, 4).unwrap(),
            ocp: OcpSection {
                negative: "builtin:graphite".into(),
                positive: Some("builtin:nmc".into()),
                positive_charge: None,
                positive_discharge: None,
            },
            simulation: SimulationSection::default(),
            aging: None,
            coreshell: None,
            identification: None,
            soh: None,
            hybrid: None,
        }
    }

    #[test]
    fn digest_tracks_semantic_content_only() {
        let a = config();
        let mut b = config();
        assert_eq!(config_digest(&a), config_digest(&b));
        b.seed = 2;
        assert_ne!(config_digest(&a), config_digest(&b));
    }

    #[test]
    fn finish_requires_declared_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config();
        let mut m = ManifestBuilder::new("simulate", &cfg, 1);
        m.add_output(&dir.path().join("missing.csv"));
        assert!(m.finish(dir.path()).is_err());

        let mut m = ManifestBuilder::new("simulate", &cfg, 1);
        let out = dir.path().join("present.csv");
        std::fs::write(&out, "x").unwrap();
        m.add_output(&out);
        m.finish(dir.path()).unwrap();
        assert!(dir.path().join("manifest.json").exists());
    }
}
