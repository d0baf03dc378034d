//! `simulate`: run the cell model over a profile and export the sample table
//! plus plot data.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use cellbench_core::drivecycle;
use cellbench_core::espm::{SimulationOutput, Simulator};
use cellbench_core::seeds;
use cellbench_core::timeseries::TimeSeries;

use super::{runtime, validation, CmdResult, RunContext};
use crate::ingest::ingest_timeseries;
use crate::manifest::ManifestBuilder;
use crate::plotdata::{write_series_csv, write_svg_lines, Series};

pub fn run(ctx: &RunContext) -> CmdResult {
    let mut manifest = ManifestBuilder::new("simulate", &ctx.config, ctx.seed);

    let profile = load_profile(ctx, &mut manifest)?;
    let options = ctx.sim_options();
    let sim = Simulator::new(
        &ctx.config.cell,
        &ctx.config.grid,
        &ctx.positive,
        &ctx.negative,
        options,
    )
    .map_err(validation)?;
    let output = sim.simulate(&profile).map_err(runtime)?;
    if let Some((t, v)) = output.terminated {
        log::info!("voltage cutoff at t = {t} s (V = {v:.4})");
    }
    let extrapolated = output.extrapolated.iter().filter(|&&e| e).count();
    if extrapolated > 0 {
        log::warn!(
            "{extrapolated} of {} samples left an OCP table domain",
            output.len()
        );
    }

    let csv_path = ctx.out_dir.join("simulation.csv");
    write_output_csv(
        &csv_path,
        &output,
        ctx.config.simulation.internal_columns,
        ctx.config.simulation.aging_columns,
    )
    .map_err(runtime)?;
    manifest.add_output(&csv_path);

    let plot_csv = ctx.out_dir.join("voltage_plot.csv");
    let plot_svg = ctx.out_dir.join("voltage_plot.svg");
    let series = [Series {
        name: "voltage",
        x: &output.t,
        y: &output.voltage,
    }];
    write_series_csv(&plot_csv, &series).map_err(runtime)?;
    write_svg_lines(&plot_svg, "terminal voltage", &series).map_err(runtime)?;
    manifest.add_output(&plot_csv);
    manifest.add_output(&plot_svg);

    manifest.finish(&ctx.out_dir).map_err(runtime)?;
    println!(
        "simulate: {} samples -> {}",
        output.len(),
        csv_path.display()
    );
    Ok(())
}

pub fn load_profile(
    ctx: &RunContext,
    manifest: &mut ManifestBuilder,
) -> Result<TimeSeries, super::Failure> {
    if let Some(path) = &ctx.config.simulation.profile {
        let resolved = ctx.resolve(path);
        manifest.add_input(&resolved).map_err(runtime)?;
        let (ts, _) = ingest_timeseries(&resolved, None).map_err(validation)?;
        Ok(ts)
    } else if let Some(spec) = &ctx.config.simulation.drive_cycle {
        Ok(drivecycle::pulse_train(
            spec,
            seeds::subseed(ctx.seed, seeds::streams::DRIVE_CYCLE),
        ))
    } else {
        Err(validation(anyhow::anyhow!(
            "simulation needs either `profile` or `drive_cycle`"
        )))
    }
}

/// Writes the sample table: `t,i,v,soc_n,soc_p,temp` plus opted-in internal
/// and aging signal columns.
pub fn write_output_csv(
    path: &Path,
    out: &SimulationOutput,
    internals: bool,
    aging: bool,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    let mut header = vec!["t", "i", "v", "soc_n", "soc_p", "temp"];
    if internals {
        header.extend([
            "eta_p",
            "eta_n",
            "delta_phi_e",
            "theta_surf_p",
            "theta_surf_n",
        ]);
        if out.r_p_frac.is_some() {
            header.push("r_p_frac");
        }
    }
    if aging {
        header.extend([
            "c_sei", "c_li", "l_film", "r_film", "a_t_p", "a_t_n", "eps_p", "eps_n",
        ]);
    }
    writeln!(f, "{}", header.join(","))?;
    for k in 0..out.len() {
        let mut row = vec![
            out.t[k].to_string(),
            out.current[k].to_string(),
            out.voltage[k].to_string(),
            out.soc_n[k].to_string(),
            out.soc_p[k].to_string(),
            out.temperature[k].to_string(),
        ];
        if internals {
            row.extend([
                out.eta_p[k].to_string(),
                out.eta_n[k].to_string(),
                out.delta_phi_e[k].to_string(),
                out.theta_surf_p[k].to_string(),
                out.theta_surf_n[k].to_string(),
            ]);
            if let Some(col) = &out.r_p_frac {
                row.push(col[k].to_string());
            }
        }
        if aging {
            row.extend([
                out.c_sei[k].to_string(),
                out.c_li[k].to_string(),
                out.l_film[k].to_string(),
                out.r_film[k].to_string(),
                out.a_t_p[k].to_string(),
                out.a_t_n[k].to_string(),
                out.eps_p[k].to_string(),
                out.eps_n[k].to_string(),
            ]);
        }
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()?;
    Ok(())
}
