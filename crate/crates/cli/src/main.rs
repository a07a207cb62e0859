//! `scatlab` experiment runner.

mod cache;
mod config;
mod error;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides, Scenario};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "scatlab",
    version,
    about = "Fixed-energy scattering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(short, long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Far field for every direction of a sphere rule.
    Forward(RunArgs),
    /// Scattering matrix up to degree L.
    Smatrix(RunArgs),
    /// Projection residuals of interior targets onto averaged solutions.
    Completeness(RunArgs),
    /// S-matrix change under A → A + ∇ψ.
    GaugeCheck(RunArgs),
    /// Pair agreeing outside a ball: S-matrix difference and identities.
    Uniqueness(RunArgs),
    /// Fourier coefficients of V₂ - V₁ from CGO solutions.
    Reconstruct(RunArgs),
    /// Radial Dirichlet-to-Neumann map.
    Dtn(RunArgs),
    /// Check specs against their declared decay.
    Validate(RunArgs),
}

impl Command {
    fn split(self) -> (Scenario, RunArgs) {
        match self {
            Command::Forward(a) => (Scenario::Forward, a),
            Command::Smatrix(a) => (Scenario::Smatrix, a),
            Command::Completeness(a) => (Scenario::Completeness, a),
            Command::GaugeCheck(a) => (Scenario::GaugeCheck, a),
            Command::Uniqueness(a) => (Scenario::Uniqueness, a),
            Command::Reconstruct(a) => (Scenario::Reconstruct, a),
            Command::Dtn(a) => (Scenario::Dtn, a),
            Command::Validate(a) => (Scenario::Validate, a),
        }
    }
}

fn execute(scenario: Scenario, cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    cfg.validate(scenario)?;
    let mut out = output::Output::create(&cfg.output)?;
    let summary = scenarios::run(scenario, cfg, &mut out)?;
    out.finish(scenario, cfg, &summary)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (scenario, args) = Cli::parse().command.split();
    let mut out_dir = args.overrides.output.clone();
    let result = ExperimentConfig::load(&args.config).and_then(|mut cfg| {
        cfg.apply(&args.overrides);
        out_dir = Some(cfg.output.clone());
        execute(scenario, &cfg)
    });
    match result {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = e.record();
            eprintln!("{}", serde_json::json!({ "error": record }));
            if let Some(dir) = out_dir {
                output::write_error(&dir, &e);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
