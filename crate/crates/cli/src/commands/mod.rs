//! Subcommand implementations sharing one run context.

pub mod hybrid;
pub mod identify;
pub mod simulate;
pub mod soh;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use cellbench_core::config::WorkbenchConfig;
use cellbench_core::espm::SimulationOptions;
use cellbench_core::ocp::{self, OcpBranches, OcpTable};

/// Failure with the exit-code class attached: configuration/input problems
/// exit 2, runtime failures exit 3.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Validation(_) => "validation",
            Failure::Runtime(_) => "runtime",
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) => e,
        }
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

pub fn validation<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Validation(e.into())
}

pub fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

/// Everything a subcommand needs: the validated configuration, resolved OCP
/// tables, and the output directory.
pub struct RunContext {
    pub config: WorkbenchConfig,
    /// Directory of the config file; relative data paths resolve against it.
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub positive: OcpBranches,
    pub negative: OcpTable,
}

impl RunContext {
    pub fn load(
        config_path: &Path,
        out_dir: &Path,
        seed_override: Option<u64>,
    ) -> std::result::Result<Self, Failure> {
        let config = WorkbenchConfig::load(config_path).map_err(validation)?;
        let base_dir = config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        config.validate_files(&base_dir).map_err(validation)?;

        let resolve = |p: &str| -> PathBuf { base_dir.join(p) };
        let negative = load_single_table(&config.ocp.negative, &resolve).map_err(validation)?;
        let positive = if let Some(single) = &config.ocp.positive {
            OcpBranches::Single(load_single_table(single, &resolve).map_err(validation)?)
        } else {
            let charge = config.ocp.positive_charge.as_ref().expect("validated");
            let discharge = config.ocp.positive_discharge.as_ref().expect("validated");
            OcpBranches::Hysteretic {
                charge: load_single_table(charge, &resolve).map_err(validation)?,
                discharge: load_single_table(discharge, &resolve).map_err(validation)?,
            }
        };

        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))
            .map_err(runtime)?;
        Ok(Self {
            seed: seed_override.unwrap_or(config.seed),
            config,
            base_dir,
            out_dir: out_dir.to_path_buf(),
            positive,
            negative,
        })
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        self.base_dir.join(p)
    }

    /// Simulation options assembled from the config sections.
    pub fn sim_options(&self) -> SimulationOptions {
        let sim = &self.config.simulation;
        let cutoffs = match (sim.v_min, sim.v_max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (Some(lo), None) => Some((lo, f64::INFINITY)),
            (None, Some(hi)) => Some((f64::NEG_INFINITY, hi)),
            (None, None) => None,
        };
        SimulationOptions {
            aging: self
                .config
                .aging
                .as_ref()
                .filter(|a| a.enabled)
                .map(|a| a.parameters.clone()),
            coreshell: self
                .config
                .coreshell
                .as_ref()
                .filter(|c| c.enabled)
                .map(|c| c.config),
            cutoffs,
            initial_soc: sim.initial_soc,
            default_temperature: sim.default_temperature,
            r_film_offset: 0.0,
            contact_resistance: sim.contact_resistance.clone(),
            ..Default::default()
        }
    }
}

fn load_single_table(source: &str, resolve: &dyn Fn(&str) -> PathBuf) -> Result<OcpTable> {
    match source {
        "builtin:graphite" => Ok(ocp::default_negative_table()),
        "builtin:nmc" => Ok(ocp::default_nmc_table()),
        "builtin:lfp" => Ok(OcpTable::from_fn(ocp::lfp_ocp, 0.01, 0.99, 400)),
        "builtin:lfp_charge" => Ok(OcpTable::from_fn(
            |t| ocp::lfp_ocp(t) + ocp::LFP_BRANCH_HALF_GAP,
            0.01,
            0.99,
            400,
        )),
        "builtin:lfp_discharge" => Ok(OcpTable::from_fn(
            |t| ocp::lfp_ocp(t) - ocp::LFP_BRANCH_HALF_GAP,
            0.01,
            0.99,
            400,
        )),
        other if other.starts_with("builtin:") => Err(anyhow!("unknown builtin OCP `{other}`")),
        path => {
            OcpTable::load_csv(resolve(path)).with_context(|| format!("loading OCP table {path}"))
        }
    }
}

/// Runs `validate-config`: structural checks plus file existence.
pub fn validate_config(config_path: &Path) -> CmdResult {
    let config = WorkbenchConfig::load(config_path).map_err(validation)?;
    let base = config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    config.validate_files(&base).map_err(validation)?;
    println!("config ok: {}", config_path.display());
    Ok(())
}
