//! Workbench configuration: one TOML file drives every subcommand. Unknown
//! keys are rejected, units are SI throughout (documented in
//! `CONFIG_SCHEMA.md`), and every referenced data file must exist before a
//! run starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coreshell::CoreShellConfig;
use crate::degradation::AgingParameters;
use crate::drivecycle::DriveCycleSpec;
use crate::espm::simulate::ContactResistanceMap;
use crate::grid::SpatialGrid;
use crate::params::CellParameters;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("referenced file does not exist: {0}")]
    MissingFile(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WorkbenchConfig {
    /// Root seed; all random streams fan out from it.
    pub seed: u64,
    pub cell: CellParameters,
    pub grid: SpatialGrid,
    pub ocp: OcpSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub aging: Option<AgingSection>,
    #[serde(default)]
    pub coreshell: Option<CoreShellSection>,
    #[serde(default)]
    pub identification: Option<IdentificationSection>,
    #[serde(default)]
    pub soh: Option<SohSection>,
    #[serde(default)]
    pub hybrid: Option<HybridSection>,
}

/// OCP sources: a CSV path or a named builtin (`builtin:graphite`,
/// `builtin:nmc`, `builtin:lfp`). The positive electrode takes either a
/// single source or a charge/discharge branch pair.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OcpSection {
    pub negative: String,
    #[serde(default)]
    pub positive: Option<String>,
    #[serde(default)]
    pub positive_charge: Option<String>,
    #[serde(default)]
    pub positive_discharge: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    /// Input current/temperature profile CSV; absent when the run uses a
    /// generated profile.
    pub profile: Option<String>,
    /// Generated profile used when `profile` is absent.
    pub drive_cycle: Option<DriveCycleSpec>,
    pub initial_soc: f64,
    pub default_temperature: f64,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    /// Emit the internal signal columns in the output CSV.
    pub internal_columns: bool,
    /// Emit the aging signal columns.
    pub aging_columns: bool,
    pub contact_resistance: Option<ContactResistanceMap>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            profile: None,
            drive_cycle: None,
            initial_soc: 1.0,
            default_temperature: 298.15,
            v_min: None,
            v_max: None,
            internal_columns: false,
            aging_columns: false,
            contact_resistance: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AgingSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(flatten)]
    pub parameters: AgingParameters,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoreShellSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(flatten)]
    pub config: CoreShellConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IdentificationSection {
    /// Fresh-cell dataset CSV (t, i, v[, soc_cc]).
    pub fresh_dataset: String,
    #[serde(default)]
    pub aged_datasets: Vec<String>,
    /// `theta1`, `theta2`, `vartheta`, or a custom spec JSON path.
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_weights")]
    pub weights: [f64; 3],
    /// Pseudo-OCV dataset (capacity_ah, volts) for the OCV-based problem.
    #[serde(default)]
    pub ocv_dataset: Option<String>,
    /// Cell discharged capacity paired with the OCV dataset, Ah.
    #[serde(default)]
    pub ocv_capacity_ah: Option<f64>,
    /// Optimizer restarts for the identifiability diagnostic (0 = off);
    /// each restart re-runs stage 1 from a different seed and the report
    /// carries the per-parameter spread.
    #[serde(default)]
    pub identifiability_restarts: usize,
}

fn default_preset() -> String {
    "theta1".into()
}

fn default_budget() -> usize {
    20_000
}

fn default_weights() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SohSection {
    /// Cycling dataset CSV (t, i, v, temp, cycle_index[, q_measured]).
    pub data: String,
    /// Nominal fresh capacity, Ah.
    pub q_nom: f64,
    #[serde(default = "default_bags")]
    pub bags: usize,
    /// CC-phase feature window [offset, length] from phase start, s.
    #[serde(default = "default_window")]
    pub window_cc: [f64; 2],
    /// CV-phase feature window, s.
    #[serde(default = "default_window")]
    pub window_cv: [f64; 2],
    /// Keep the top-k features ranked by minimum-redundancy relevance;
    /// 0 keeps all.
    #[serde(default)]
    pub top_k: usize,
    /// Model artifact path (JSON + sibling .bin blob).
    #[serde(default = "default_soh_artifact")]
    pub artifact: String,
}

fn default_bags() -> usize {
    10
}

fn default_window() -> [f64; 2] {
    [0.0, 600.0]
}

fn default_soh_artifact() -> String {
    "soh_model.json".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HybridSection {
    /// Training record CSV with measured voltage (t, i, v[, temp]).
    pub train_profile: String,
    /// Held-out record for evaluation.
    #[serde(default)]
    pub test_profile: Option<String>,
    /// `tree` or `forest`.
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_trees")]
    pub trees: usize,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default = "default_feature_rate")]
    pub feature_rate: f64,
    #[serde(default = "default_hybrid_artifact")]
    pub artifact: String,
}

fn default_model() -> String {
    "forest".into()
}

fn default_trees() -> usize {
    50
}

fn default_depth() -> usize {
    8
}

fn default_min_leaf() -> usize {
    5
}

fn default_feature_rate() -> f64 {
    0.8
}

fn default_hybrid_artifact() -> String {
    "hysteresis_model.json".into()
}

impl WorkbenchConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let cfg: WorkbenchConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural validation: parameter invariants and section consistency.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.cell
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.grid
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(a) = &self.aging {
            a.parameters
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(cs) = &self.coreshell {
            cs.config
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let has_pair = self.ocp.positive_charge.is_some() && self.ocp.positive_discharge.is_some();
        let half_pair = self.ocp.positive_charge.is_some() ^ self.ocp.positive_discharge.is_some();
        if half_pair {
            return Err(ConfigError::Invalid(
                "positive_charge and positive_discharge must be given together".into(),
            ));
        }
        if self.ocp.positive.is_some() == has_pair {
            return Err(ConfigError::Invalid(
                "give either `positive` or the charge/discharge branch pair".into(),
            ));
        }
        if let Some(h) = &self.hybrid {
            if h.model != "tree" && h.model != "forest" {
                return Err(ConfigError::Invalid(format!(
                    "hybrid.model must be `tree` or `forest`, got `{}`",
                    h.model
                )));
            }
            if !(h.feature_rate > 0.0 && h.feature_rate <= 1.0) {
                return Err(ConfigError::Invalid(format!(
                    "hybrid.feature_rate must be in (0, 1], got {}",
                    h.feature_rate
                )));
            }
        }
        if let Some(s) = &self.soh {
            if s.q_nom <= 0.0 {
                return Err(ConfigError::Invalid("soh.q_nom must be positive".into()));
            }
            if s.bags < 1 {
                return Err(ConfigError::Invalid("soh.bags must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Checks that every referenced data file exists, resolving relative
    /// paths against `base`. Builtin OCP names (`builtin:*`) are not files.
    pub fn validate_files(&self, base: &Path) -> Result<(), ConfigError> {
        let mut paths: Vec<&String> = Vec::new();
        fn push<'a>(s: &'a Option<String>, paths: &mut Vec<&'a String>) {
            if let Some(s) = s {
                paths.push(s);
            }
        }
        paths.push(&self.ocp.negative);
        push(&self.ocp.positive, &mut paths);
        push(&self.ocp.positive_charge, &mut paths);
        push(&self.ocp.positive_discharge, &mut paths);
        push(&self.simulation.profile, &mut paths);
        if let Some(id) = &self.identification {
            paths.push(&id.fresh_dataset);
            paths.extend(id.aged_datasets.iter());
            push(&id.ocv_dataset, &mut paths);
        }
        if let Some(s) = &self.soh {
            paths.push(&s.data);
        }
        if let Some(h) = &self.hybrid {
            paths.push(&h.train_profile);
            push(&h.test_profile, &mut paths);
        }
        for p in paths {
            if p.starts_with("builtin:") {
                continue;
            }
            let resolved = base.join(p);
            if !resolved.exists() {
                return Err(ConfigError::MissingFile(resolved));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> String {
        let cfg = WorkbenchConfig {
            seed: 42,
            cell: CellParameters::default_nmc(),
            grid: SpatialGrid::new(12, 8, 4, 8).unwrap(),
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
        };
        toml::to_string(&cfg).unwrap()
    }

    #[test]
    fn minimal_config_parses() {
        let cfg: WorkbenchConfig = toml::from_str(&minimal_toml()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.simulation.initial_soc, 1.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{}\nnot_a_key = 1\n", minimal_toml());
        assert!(toml::from_str::<WorkbenchConfig>(&text).is_err());
    }

    #[test]
    fn half_branch_pair_rejected() {
        let mut cfg: WorkbenchConfig = toml::from_str(&minimal_toml()).unwrap();
        cfg.ocp.positive_charge = Some("builtin:lfp".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_files_flagged() {
        let mut cfg: WorkbenchConfig = toml::from_str(&minimal_toml()).unwrap();
        cfg.simulation.profile = Some("does_not_exist.csv".into());
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            cfg.validate_files(dir.path()),
            Err(ConfigError::MissingFile(_))
        ));
    }
}
