//! `hybrid train|simulate`: fit the hysteresis compensator on physics
//! residuals, then compose `V = V_cs + V_h` over a profile.

use std::io::Write;
use std::path::Path;

use anyhow::anyhow;
use cellbench_core::espm::{SimulationOutput, Simulator};
use cellbench_core::hybrid::{
    build_residual_dataset, forest_fit, hysteresis_features, load_hysteresis, save_hysteresis,
    tree_fit, ForestOptions, HysteresisModel, TreeOptions,
};
use cellbench_core::seeds;
use cellbench_core::timeseries::TimeSeries;
use serde::Serialize;

use super::{runtime, validation, CmdResult, Failure, RunContext};
use crate::ingest::ingest_timeseries;
use crate::manifest::ManifestBuilder;
use crate::plotdata::{write_series_csv, write_svg_lines, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridAction {
    Train,
    Simulate,
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    ((0..n).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>() / n as f64).sqrt()
}

fn simulate_physics(ctx: &RunContext, profile: &TimeSeries) -> Result<SimulationOutput, Failure> {
    let mut options = ctx.sim_options();
    // hybrid runs must cover the whole record; cutoffs would truncate it
    options.cutoffs = None;
    let sim = Simulator::new(
        &ctx.config.cell,
        &ctx.config.grid,
        &ctx.positive,
        &ctx.negative,
        options,
    )
    .map_err(validation)?;
    sim.simulate(profile).map_err(runtime)
}

fn load_record(
    ctx: &RunContext,
    path: &str,
    manifest: &mut ManifestBuilder,
) -> Result<TimeSeries, Failure> {
    let resolved = ctx.resolve(path);
    manifest.add_input(&resolved).map_err(runtime)?;
    let (ts, _) = ingest_timeseries(&resolved, None).map_err(validation)?;
    Ok(ts)
}

pub fn run(ctx: &RunContext, action: HybridAction) -> CmdResult {
    let section = ctx
        .config
        .hybrid
        .as_ref()
        .ok_or_else(|| validation(anyhow!("config has no [hybrid] section")))?;
    let artifact_path = ctx.out_dir.join(&section.artifact);

    match action {
        HybridAction::Train => {
            let mut manifest = ManifestBuilder::new("hybrid-train", &ctx.config, ctx.seed);
            let record = load_record(ctx, &section.train_profile, &mut manifest)?;
            if record.voltage.is_none() {
                return Err(validation(anyhow!(
                    "training profile needs a measured voltage column"
                )));
            }
            let sim_out = simulate_physics(ctx, &record)?;
            let (x, y) = build_residual_dataset(&record, &sim_out).map_err(runtime)?;
            if x.len() < 10 {
                return Err(runtime(anyhow!(
                    "only {} usable residual samples after alignment",
                    x.len()
                )));
            }
            let model = match section.model.as_str() {
                "tree" => HysteresisModel::Tree(tree_fit(
                    &x,
                    &y,
                    TreeOptions {
                        max_depth: section.max_depth,
                        min_leaf: section.min_leaf,
                    },
                )),
                _ => HysteresisModel::Forest(forest_fit(
                    &x,
                    &y,
                    ForestOptions {
                        trees: section.trees,
                        max_depth: section.max_depth,
                        min_leaf: section.min_leaf,
                        feature_rate: section.feature_rate,
                        bootstrap: true,
                    },
                    seeds::subseed(ctx.seed, seeds::streams::FOREST),
                )),
            };
            save_hysteresis(&model, &artifact_path).map_err(runtime)?;
            manifest.add_output(&artifact_path);

            let v_exp = record.voltage.as_ref().unwrap();
            let full_features = hysteresis_features(&record.current, &sim_out);
            let v_h = model.predict(&full_features);
            let v_hybrid: Vec<f64> = sim_out
                .voltage
                .iter()
                .zip(&v_h)
                .map(|(cs, h)| cs + h)
                .collect();
            #[derive(Serialize)]
            struct TrainReport {
                model: String,
                samples: usize,
                physics_rmse: f64,
                hybrid_rmse: f64,
            }
            let report = TrainReport {
                model: section.model.clone(),
                samples: x.len(),
                physics_rmse: rmse(v_exp, &sim_out.voltage),
                hybrid_rmse: rmse(v_exp, &v_hybrid),
            };
            let report_path = ctx.out_dir.join("hybrid_train_report.json");
            std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
                .map_err(runtime)?;
            manifest.add_output(&report_path);
            manifest.finish(&ctx.out_dir).map_err(runtime)?;
            println!(
                "hybrid train ({}): physics RMSE {:.4} V -> hybrid RMSE {:.4} V in-sample",
                report.model, report.physics_rmse, report.hybrid_rmse
            );
        }
        HybridAction::Simulate => {
            let mut manifest = ManifestBuilder::new("hybrid-simulate", &ctx.config, ctx.seed);
            let profile_path = section
                .test_profile
                .as_ref()
                .unwrap_or(&section.train_profile);
            let record = load_record(ctx, profile_path, &mut manifest)?;
            let model = load_hysteresis(&artifact_path).map_err(validation)?;
            let sim_out = simulate_physics(ctx, &record)?;
            let features = hysteresis_features(&record.current, &sim_out);
            let v_h = model.predict(&features);
            let v_hybrid: Vec<f64> = sim_out
                .voltage
                .iter()
                .zip(&v_h)
                .map(|(cs, h)| cs + h)
                .collect();

            let csv_path = ctx.out_dir.join("hybrid_simulation.csv");
            write_hybrid_csv(&csv_path, &record, &sim_out, &v_h, &v_hybrid).map_err(runtime)?;
            manifest.add_output(&csv_path);

            let mut series = vec![
                Series {
                    name: "physics",
                    x: &sim_out.t,
                    y: &sim_out.voltage,
                },
                Series {
                    name: "hybrid",
                    x: &sim_out.t,
                    y: &v_hybrid,
                },
            ];
            if let Some(v_exp) = &record.voltage {
                series.push(Series {
                    name: "measured",
                    x: &record.t,
                    y: v_exp,
                });
            }
            let plot_csv = ctx.out_dir.join("hybrid_overlay.csv");
            let plot_svg = ctx.out_dir.join("hybrid_overlay.svg");
            write_series_csv(&plot_csv, &series).map_err(runtime)?;
            write_svg_lines(&plot_svg, "hybrid vs physics voltage", &series).map_err(runtime)?;
            manifest.add_output(&plot_csv);
            manifest.add_output(&plot_svg);

            if let Some(v_exp) = &record.voltage {
                #[derive(Serialize)]
                struct EvalReport {
                    physics_rmse: f64,
                    hybrid_rmse: f64,
                    improvement_percent: f64,
                }
                let physics_rmse = rmse(v_exp, &sim_out.voltage);
                let hybrid_rmse = rmse(v_exp, &v_hybrid);
                let report = EvalReport {
                    physics_rmse,
                    hybrid_rmse,
                    improvement_percent: (1.0 - hybrid_rmse / physics_rmse) * 100.0,
                };
                let report_path = ctx.out_dir.join("hybrid_eval.json");
                std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
                    .map_err(runtime)?;
                manifest.add_output(&report_path);
                println!(
                    "hybrid simulate: physics RMSE {:.4} V, hybrid RMSE {:.4} V ({:.1}% better)",
                    report.physics_rmse, report.hybrid_rmse, report.improvement_percent
                );
            } else {
                println!("hybrid simulate: {} samples", sim_out.len());
            }
            manifest.finish(&ctx.out_dir).map_err(runtime)?;
        }
    }
    Ok(())
}

fn write_hybrid_csv(
    path: &Path,
    record: &TimeSeries,
    sim: &SimulationOutput,
    v_h: &[f64],
    v_hybrid: &[f64],
) -> anyhow::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let has_exp = record.voltage.is_some();
    if has_exp {
        writeln!(f, "t,i,v_cs,v_h,v,v_exp")?;
    } else {
        writeln!(f, "t,i,v_cs,v_h,v")?;
    }
    for k in 0..sim.len() {
        if has_exp {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                sim.t[k],
                sim.current[k],
                sim.voltage[k],
                v_h[k],
                v_hybrid[k],
                record.voltage.as_ref().unwrap()[k]
            )?;
        } else {
            writeln!(
                f,
                "{},{},{},{},{}",
                sim.t[k], sim.current[k], sim.voltage[k], v_h[k], v_hybrid[k]
            )?;
        }
    }
    f.flush()?;
    Ok(())
}
