//! `expect` — pipeline driver for expectation analytics over travel UGC.
//!
//! Usage: `expect <stage> --config <file> [--mock] [--seed N] [--force]`
//! where stage is one of ingest, extract, survey, train, score, agree,
//! analyze, report, or the digest checker `verify`.
//!
//! Exit codes: 0 success, 2 config error, 3 missing dependency stage,
//! 4 provider unavailable, 5 validation failure.

mod config;
mod manifest;
mod stages;

use clap::Parser;
use config::PipelineConfig;
use manifest::RunManifest;
use stages::{run_stage, Stage, StageError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Command {
    Ingest,
    Extract,
    Survey,
    Train,
    Score,
    Agree,
    Analyze,
    Report,
    /// Re-check every output digest recorded in the manifest.
    Verify,
    /// Run every stage in order.
    All,
}

#[derive(Debug, Parser)]
#[command(name = "expect", version, about = "Destination-expectation analytics pipeline")]
struct Cli {
    /// Stage to run.
    #[arg(value_enum)]
    stage: Command,
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Force the deterministic offline mock provider.
    #[arg(long)]
    mock: bool,
    /// Override every stage seed with one master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Proceed even when the out dir was produced with a different config.
    #[arg(long)]
    force: bool,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, StageError> {
    let mut cfg =
        PipelineConfig::load(&cli.config).map_err(|e| StageError::Config(format!("{e:#}")))?;
    if cli.mock {
        cfg.provider.mock = true;
    }
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), StageError> {
    let cfg = load_config(cli)?;
    let stages: Vec<Stage> = match cli.stage {
        Command::Ingest => vec![Stage::Ingest],
        Command::Extract => vec![Stage::Extract],
        Command::Survey => vec![Stage::Survey],
        Command::Train => vec![Stage::Train],
        Command::Score => vec![Stage::Score],
        Command::Agree => vec![Stage::Agree],
        Command::Analyze => vec![Stage::Analyze],
        Command::Report => vec![Stage::Report],
        Command::All => Stage::ALL.to_vec(),
        Command::Verify => {
            let manifest = RunManifest::load_or_default(&cfg.paths.out_dir)?;
            if manifest.stages.is_empty() {
                return Err(StageError::Validation("no recorded stages to verify".into()));
            }
            let problems = manifest.verify(&cfg.paths.out_dir);
            if problems.is_empty() {
                println!(
                    "verify: {} stages, all digests match",
                    manifest.stages.len()
                );
                return Ok(());
            }
            for p in &problems {
                eprintln!("verify: {p}");
            }
            return Err(StageError::Validation(format!(
                "{} digest problems",
                problems.len()
            )));
        }
    };

    for stage in stages {
        let summary = run_stage(stage, &cfg, cli.force)?;
        for line in summary {
            println!("{stage}: {line}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("expect: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
