//! Batch front door for the battery modeling workbench.

mod commands;
mod ingest;
mod manifest;
mod plotdata;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use commands::{CmdResult, RunContext};

/// Environment variable holding the default configuration path.
const CONFIG_ENV: &str = "CELLBENCH_CONFIG";

#[derive(Parser)]
#[command(
    name = "cellbench",
    version,
    about = "Battery simulation, identification, and health-estimation workbench"
)]
struct Cli {
    /// Configuration file (TOML). Falls back to $CELLBENCH_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the configured root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log level (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the cell model over a current/temperature profile.
    Simulate,
    /// Identify model parameters from measured data.
    Identify {
        /// Override the configured preset (theta1, vartheta, or a custom
        /// spec file path).
        #[arg(long)]
        preset: Option<String>,
    },
    /// State-of-health estimation pipeline.
    Soh {
        #[command(subcommand)]
        action: SohCommand,
    },
    /// Hybrid physics + learned-hysteresis model.
    Hybrid {
        #[command(subcommand)]
        action: HybridCommand,
    },
    /// Check the configuration and referenced files without running.
    ValidateConfig,
}

#[derive(Subcommand)]
enum SohCommand {
    /// Train the bagged estimator on labelled cycles.
    Train {
        /// Override both feature-window lengths, seconds.
        #[arg(long)]
        window: Option<f64>,
        /// Override the ensemble size.
        #[arg(long)]
        bags: Option<usize>,
    },
    /// Predict SOH for the cycles in the configured dataset.
    Predict,
    /// Predict and score against measured capacities.
    Eval,
}

#[derive(Subcommand)]
enum HybridCommand {
    /// Fit the hysteresis compensator on physics residuals.
    Train,
    /// Compose V = V_cs + V_h over a profile.
    Simulate,
}

fn dispatch(cli: &Cli, config_path: &Path) -> CmdResult {
    if matches!(cli.command, Command::ValidateConfig) {
        return commands::validate_config(config_path);
    }
    let mut ctx = RunContext::load(config_path, &cli.out, cli.seed)?;
    match &cli.command {
        Command::Simulate => commands::simulate::run(&ctx),
        Command::Identify { preset } => {
            if let (Some(p), Some(section)) = (preset, ctx.config.identification.as_mut()) {
                section.preset = p.clone();
            }
            commands::identify::run(&ctx)
        }
        Command::Soh { action } => {
            let action = match action {
                SohCommand::Train { window, bags } => {
                    if let Some(section) = ctx.config.soh.as_mut() {
                        if let Some(w) = window {
                            section.window_cc[1] = *w;
                            section.window_cv[1] = *w;
                        }
                        if let Some(b) = bags {
                            section.bags = *b;
                        }
                    }
                    commands::soh::SohAction::Train
                }
                SohCommand::Predict => commands::soh::SohAction::Predict,
                SohCommand::Eval => commands::soh::SohAction::Eval,
            };
            commands::soh::run(&ctx, action)
        }
        Command::Hybrid { action } => {
            let action = match action {
                HybridCommand::Train => commands::hybrid::HybridAction::Train,
                HybridCommand::Simulate => commands::hybrid::HybridAction::Simulate,
            };
            commands::hybrid::run(&ctx, action)
        }
        Command::ValidateConfig => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();

    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let Some(config_path) = config_path else {
        eprintln!(
            "{}",
            serde_json::json!({
                "kind": "validation",
                "message": format!("no config given: pass --config or set {CONFIG_ENV}"),
            })
        );
        return ExitCode::from(2);
    };

    match dispatch(&cli, &config_path) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let record = serde_json::json!({
                "kind": failure.kind(),
                "message": format!("{:#}", failure.error()),
            });
            eprintln!("{record}");
            let _ = std::fs::create_dir_all(&cli.out)
                .and_then(|_| std::fs::write(cli.out.join("error.json"), record.to_string()));
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
