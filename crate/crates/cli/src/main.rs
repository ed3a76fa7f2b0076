use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skyaug_cli::config::PipelineConfig;
use skyaug_cli::{CliError, Outcome, Pipeline, Stage};

#[derive(Parser)]
#[command(name = "skyaug", version, about = "GAN-augmented sky/cloud segmentation pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable), e.g. `--set gan_epochs=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (same as `--set output_dir=...`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Re-run stages even when their inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load or synthesize the dataset, resample it and write the split.
    Prepare,
    /// Train the GAN on the 16-fold augmented training images.
    TrainGan,
    /// Draw candidate images from the trained generator.
    SampleGan,
    /// Cluster and smooth candidate images into pseudo ground truth.
    Pseudolabel,
    /// Sweep the number of PLS components on the validation set.
    TunePls,
    /// Keep candidates that do not lower validation R².
    Filter,
    /// Fit the final models with and without augmentation.
    TrainFinal,
    /// Compare both models on the test set.
    Evaluate,
    /// Collect plot data into the report directory.
    Report,
    /// Run every stage in order.
    Run,
    /// Print the effective configuration as a config file.
    ShowConfig,
}

fn load_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    for kv in &common.overrides {
        cfg.apply_override(kv)?;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn report(stage: Stage, outcome: Outcome) {
    match outcome {
        Outcome::Ran => eprintln!("{stage}: done"),
        Outcome::UpToDate => eprintln!("{stage}: up to date"),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.common)?;
    let stage = match cli.command {
        Command::ShowConfig => {
            print!("{}", cfg.to_text());
            return Ok(());
        }
        Command::Run => {
            let mut p = Pipeline::new(cfg, cli.common.force)?;
            for (stage, outcome) in p.run_all()? {
                report(stage, outcome);
            }
            let summary = p.dir.join("eval/comparison.csv");
            if let Ok(text) = std::fs::read_to_string(&summary) {
                print!("{text}");
            }
            return Ok(());
        }
        Command::Prepare => Stage::Prepare,
        Command::TrainGan => Stage::TrainGan,
        Command::SampleGan => Stage::SampleGan,
        Command::Pseudolabel => Stage::Pseudolabel,
        Command::TunePls => Stage::TunePls,
        Command::Filter => Stage::Filter,
        Command::TrainFinal => Stage::TrainFinal,
        Command::Evaluate => Stage::Evaluate,
        Command::Report => Stage::Report,
    };
    let mut p = Pipeline::new(cfg, cli.common.force)?;
    report(stage, p.run(stage)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
