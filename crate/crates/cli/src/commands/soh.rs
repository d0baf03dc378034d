//! `soh train|predict|eval`: the bagged-GPR health-estimation pipeline.

use std::io::Write;

use anyhow::{anyhow, Context};
use cellbench_core::soh::{
    artifact, evaluate_soh, predict_soh, train_soh_model, BagOptions, CyclingDataset,
    SegmentOptions, SohTrainOptions,
};
use serde::Serialize;

use super::{runtime, validation, CmdResult, RunContext};
use crate::manifest::ManifestBuilder;
use crate::plotdata::write_histogram_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SohAction {
    Train,
    Predict,
    Eval,
}

fn section(ctx: &RunContext) -> Result<&cellbench_core::config::SohSection, super::Failure> {
    ctx.config
        .soh
        .as_ref()
        .ok_or_else(|| validation(anyhow!("config has no [soh] section")))
}

fn segment_options(s: &cellbench_core::config::SohSection) -> SegmentOptions {
    SegmentOptions {
        window_cc: (s.window_cc[0], s.window_cc[1]),
        window_cv: (s.window_cv[0], s.window_cv[1]),
        ..Default::default()
    }
}

pub fn run(ctx: &RunContext, action: SohAction) -> CmdResult {
    let s = section(ctx)?;
    let name = match action {
        SohAction::Train => "soh-train",
        SohAction::Predict => "soh-predict",
        SohAction::Eval => "soh-eval",
    };
    let mut manifest = ManifestBuilder::new(name, &ctx.config, ctx.seed);
    let data_path = ctx.resolve(&s.data);
    manifest.add_input(&data_path).map_err(runtime)?;
    let dataset = CyclingDataset::load_csv(&data_path).map_err(validation)?;
    let artifact_path = ctx.out_dir.join(&s.artifact);

    match action {
        SohAction::Train => {
            let opts = SohTrainOptions {
                segment: segment_options(s),
                q_nom_ah: s.q_nom,
                bags: s.bags,
                top_k: s.top_k,
                seed: ctx.seed,
                bag: BagOptions::default(),
            };
            let model = train_soh_model(&dataset, &opts).map_err(runtime)?;
            artifact::save_model(&model, &artifact_path).map_err(runtime)?;
            manifest.add_output(&artifact_path);
            manifest.add_output(&artifact_path.with_extension("bin"));

            let (_, metrics) = evaluate_soh(&model, &dataset).map_err(runtime)?;
            #[derive(Serialize)]
            struct TrainReport {
                cycles: usize,
                selected_features: Vec<String>,
                in_sample_rmse: f64,
                in_sample_rmspe: f64,
                in_sample_max_ape: f64,
            }
            let report = TrainReport {
                cycles: model.y_train.len(),
                selected_features: model
                    .selected
                    .iter()
                    .map(|&j| model.feature_names[j].clone())
                    .collect(),
                in_sample_rmse: metrics.rmse,
                in_sample_rmspe: metrics.rmspe,
                in_sample_max_ape: metrics.mape,
            };
            let report_path = ctx.out_dir.join("soh_train_report.json");
            std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
                .map_err(runtime)?;
            manifest.add_output(&report_path);
            manifest.finish(&ctx.out_dir).map_err(runtime)?;
            println!(
                "soh train: {} cycles, in-sample RMSPE {:.3}% -> {}",
                report.cycles,
                metrics.rmspe,
                artifact_path.display()
            );
        }
        SohAction::Predict | SohAction::Eval => {
            let model = artifact::load_model(&artifact_path)
                .with_context(|| format!("loading model {}", artifact_path.display()))
                .map_err(validation)?;
            let predictions = predict_soh(&model, &dataset).map_err(runtime)?;
            let pred_path = ctx.out_dir.join("soh_predictions.csv");
            let mut f =
                std::io::BufWriter::new(std::fs::File::create(&pred_path).map_err(runtime)?);
            writeln!(f, "cycle_index,soh_mean,soh_std").map_err(runtime)?;
            for p in &predictions {
                writeln!(f, "{},{},{}", p.cycle_index, p.soh_mean, p.soh_std).map_err(runtime)?;
            }
            f.flush().map_err(runtime)?;
            drop(f);
            manifest.add_output(&pred_path);

            if action == SohAction::Eval {
                let (_, metrics) = evaluate_soh(&model, &dataset).map_err(runtime)?;
                let metrics_path = ctx.out_dir.join("soh_metrics.json");
                std::fs::write(
                    &metrics_path,
                    serde_json::to_string_pretty(&metrics).unwrap(),
                )
                .map_err(runtime)?;
                manifest.add_output(&metrics_path);

                // error histogram (per-cycle percentage errors)
                let mut errors = Vec::new();
                for p in &predictions {
                    if let Some(c) = dataset
                        .cycles
                        .iter()
                        .find(|c| c.cycle_index == p.cycle_index)
                    {
                        if let Some(q) = c.q_measured_ah {
                            let truth = q / model.q_nom_ah * 100.0;
                            errors.push((p.soh_mean - truth) / truth * 100.0);
                        }
                    }
                }
                if !errors.is_empty() {
                    let hist_path = ctx.out_dir.join("soh_error_histogram.csv");
                    write_histogram_csv(&hist_path, &errors, 15).map_err(runtime)?;
                    manifest.add_output(&hist_path);
                }
                println!(
                    "soh eval: RMSPE {:.3}%, max APE {:.3}%",
                    metrics.rmspe, metrics.mape
                );
            } else {
                println!(
                    "soh predict: {} cycles -> {}",
                    predictions.len(),
                    pred_path.display()
                );
            }
            manifest.finish(&ctx.out_dir).map_err(runtime)?;
        }
    }
    Ok(())
}
