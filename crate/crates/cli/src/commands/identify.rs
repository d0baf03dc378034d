//! `identify`: staged fresh/aged parameter identification or the OCV-based
//! window problem, selected by the config preset.

use std::io::Write;

use anyhow::{anyhow, Context, Result};
use cellbench_core::identification::staged::StagedSettings;
use cellbench_core::identification::{
    identify_two_stage, optimize, FreshCostProblem, IdentificationDataset, OcvCostProblem,
    OcvDataset, ParameterSpec,
};
use cellbench_core::seeds;
use serde::Serialize;

use super::{runtime, validation, CmdResult, RunContext};
use crate::ingest::ingest_timeseries;
use crate::manifest::ManifestBuilder;

#[derive(Serialize)]
struct OcvReport {
    preset: &'static str,
    best: std::collections::BTreeMap<String, f64>,
    theta_n_0: f64,
    theta_p_0: f64,
    cost: f64,
    evaluations: usize,
}

pub fn run(ctx: &RunContext) -> CmdResult {
    let section = ctx
        .config
        .identification
        .as_ref()
        .ok_or_else(|| validation(anyhow!("config has no [identification] section")))?;
    let manifest = ManifestBuilder::new("identify", &ctx.config, ctx.seed);

    match section.preset.as_str() {
        "vartheta" => run_ocv(ctx, manifest),
        "theta1" | "theta2" => run_staged(ctx, manifest),
        custom => run_custom_spec(ctx, custom, manifest),
    }
}

fn load_dataset(ctx: &RunContext, path: &str) -> Result<IdentificationDataset> {
    let resolved = ctx.resolve(path);
    let (ts, _) = ingest_timeseries(&resolved, None)?;
    if ts.soc_cc.is_some() {
        Ok(IdentificationDataset::new(ts)?)
    } else {
        let q = ctx.config.cell.capacity_ah();
        Ok(IdentificationDataset::from_coulomb_counting(
            ts,
            ctx.config.simulation.initial_soc,
            q,
        )?)
    }
}

fn write_convergence(
    ctx: &RunContext,
    history: &[cellbench_core::identification::de::HistoryPoint],
) -> Result<std::path::PathBuf> {
    let path = ctx.out_dir.join("convergence.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "evaluations,best_cost")?;
    for h in history {
        writeln!(f, "{},{}", h.evaluations, h.best_cost)?;
    }
    f.flush()?;
    Ok(path)
}

fn run_staged(ctx: &RunContext, mut manifest: ManifestBuilder) -> CmdResult {
    let section = ctx.config.identification.as_ref().unwrap();
    let fresh_path = ctx.resolve(&section.fresh_dataset);
    manifest.add_input(&fresh_path).map_err(runtime)?;
    let fresh = load_dataset(ctx, &section.fresh_dataset).map_err(validation)?;
    let mut aged = Vec::new();
    for p in &section.aged_datasets {
        manifest.add_input(&ctx.resolve(p)).map_err(runtime)?;
        aged.push(load_dataset(ctx, p).map_err(validation)?);
    }

    let settings = StagedSettings {
        budget_stage1: section.budget,
        budget_stage2: (section.budget / 5).max(1000),
        weights: section.weights,
        seed: ctx.seed,
        initial_soc: ctx.config.simulation.initial_soc,
        default_temperature: ctx.config.simulation.default_temperature,
    };
    let result = identify_two_stage(
        &ctx.config.cell,
        &ctx.config.grid,
        &ctx.positive,
        &ctx.negative,
        &fresh,
        &aged,
        &settings,
    )
    .map_err(runtime)?;

    // optional identifiability diagnostic: stage-1 minimum spread across
    // multi-seed restarts
    let spread = if section.identifiability_restarts > 0 {
        let spec = ParameterSpec::theta1(&ctx.config.cell);
        let problem = FreshCostProblem {
            base: &ctx.config.cell,
            grid: &ctx.config.grid,
            positive_ocp: &ctx.positive,
            negative_ocp: &ctx.negative,
            spec: &spec,
            dataset: &fresh,
            weights: section.weights,
            initial_soc: ctx.config.simulation.initial_soc,
            default_temperature: ctx.config.simulation.default_temperature,
        };
        let seeds: Vec<u64> = (0..section.identifiability_restarts as u64)
            .map(|k| cellbench_core::seeds::subseed(ctx.seed, 500 + k))
            .collect();
        Some(
            cellbench_core::identification::restart_spread(
                |theta| problem.cost(theta),
                &spec,
                section.budget,
                &seeds,
            )
            .map_err(runtime)?,
        )
    } else {
        None
    };

    #[derive(Serialize)]
    struct StagedReport<'a> {
        #[serde(flatten)]
        result: &'a cellbench_core::identification::StagedResult,
        #[serde(skip_serializing_if = "Option::is_none")]
        identifiability: Option<Vec<cellbench_core::identification::RestartSpread>>,
    }
    let report = StagedReport {
        result: &result,
        identifiability: spread,
    };
    let report_path = ctx.out_dir.join("identification.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
        .context("writing identification report")
        .map_err(runtime)?;
    manifest.add_output(&report_path);
    let conv = write_convergence(ctx, &result.stage1.history).map_err(runtime)?;
    manifest.add_output(&conv);
    manifest.finish(&ctx.out_dir).map_err(runtime)?;

    println!(
        "identify: stage-1 cost {:.6e} over {} evaluations; {} aged stage(s)",
        result.stage1.cost,
        result.stage1.evaluations,
        result.stage2.len()
    );
    Ok(())
}

fn run_ocv(ctx: &RunContext, mut manifest: ManifestBuilder) -> CmdResult {
    let section = ctx.config.identification.as_ref().unwrap();
    let ocv_path = section
        .ocv_dataset
        .as_ref()
        .ok_or_else(|| validation(anyhow!("vartheta preset needs `ocv_dataset`")))?;
    let q_cell = section
        .ocv_capacity_ah
        .ok_or_else(|| validation(anyhow!("vartheta preset needs `ocv_capacity_ah`")))?;
    let resolved = ctx.resolve(ocv_path);
    manifest.add_input(&resolved).map_err(runtime)?;
    let dataset = OcvDataset::load_csv(&resolved).map_err(validation)?;

    let problem = OcvCostProblem {
        positive_ocp: &ctx.positive,
        negative_ocp: &ctx.negative,
        dataset: &dataset,
        q_cell_ah: q_cell,
    };
    let spec = ParameterSpec::vartheta(q_cell);
    let result = optimize(
        |v| problem.cost(v),
        &spec,
        section.budget,
        seeds::subseed(ctx.seed, seeds::streams::OPTIMIZER),
    )
    .map_err(runtime)?;
    let window = problem.window(&result.best).map_err(runtime)?;

    let report = OcvReport {
        preset: "vartheta",
        best: spec
            .names()
            .iter()
            .zip(&result.best)
            .map(|(n, v)| (n.to_string(), *v))
            .collect(),
        theta_n_0: window.theta_n_0,
        theta_p_0: window.theta_p_0,
        cost: result.best_cost,
        evaluations: result.evaluations,
    };
    let report_path = ctx.out_dir.join("identification.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(runtime)?;
    manifest.add_output(&report_path);
    let conv = write_convergence(ctx, &result.history).map_err(runtime)?;
    manifest.add_output(&conv);
    manifest.finish(&ctx.out_dir).map_err(runtime)?;
    println!(
        "identify (OCV): cost {:.6e}, theta_n_0 = {:.4}, theta_p_0 = {:.4}",
        result.best_cost, window.theta_n_0, window.theta_p_0
    );
    Ok(())
}

fn run_custom_spec(ctx: &RunContext, spec_path: &str, mut manifest: ManifestBuilder) -> CmdResult {
    let section = ctx.config.identification.as_ref().unwrap();
    let resolved = ctx.resolve(spec_path);
    let text = std::fs::read_to_string(&resolved)
        .with_context(|| format!("reading spec {}", resolved.display()))
        .map_err(validation)?;
    let spec: ParameterSpec = serde_json::from_str(&text).map_err(validation)?;
    let fresh_path = ctx.resolve(&section.fresh_dataset);
    manifest.add_input(&fresh_path).map_err(runtime)?;
    manifest.add_input(&resolved).map_err(runtime)?;
    let dataset = load_dataset(ctx, &section.fresh_dataset).map_err(validation)?;

    let problem = FreshCostProblem {
        base: &ctx.config.cell,
        grid: &ctx.config.grid,
        positive_ocp: &ctx.positive,
        negative_ocp: &ctx.negative,
        spec: &spec,
        dataset: &dataset,
        weights: section.weights,
        initial_soc: ctx.config.simulation.initial_soc,
        default_temperature: ctx.config.simulation.default_temperature,
    };
    let result = optimize(
        |theta| problem.cost(theta),
        &spec,
        section.budget,
        seeds::subseed(ctx.seed, seeds::streams::OPTIMIZER),
    )
    .map_err(runtime)?;

    let best: std::collections::BTreeMap<String, f64> = spec
        .names()
        .iter()
        .zip(&result.best)
        .map(|(n, v)| (n.to_string(), *v))
        .collect();
    #[derive(Serialize)]
    struct CustomReport<'a> {
        preset: &'a str,
        best: std::collections::BTreeMap<String, f64>,
        cost: f64,
        evaluations: usize,
    }
    let report_path = ctx.out_dir.join("identification.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&CustomReport {
            preset: spec_path,
            best,
            cost: result.best_cost,
            evaluations: result.evaluations,
        })
        .unwrap(),
    )
    .map_err(runtime)?;
    manifest.add_output(&report_path);
    let conv = write_convergence(ctx, &result.history).map_err(runtime)?;
    manifest.add_output(&conv);
    manifest.finish(&ctx.out_dir).map_err(runtime)?;
    println!(
        "identify (custom): cost {:.6e} over {} evaluations",
        result.best_cost, result.evaluations
    );
    Ok(())
}
