use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use compeval::pipeline::{run_stage, PipelineConfig, Stage, Workspace};

/// Generate controlled probing datasets, train encoders and probe them.
#[derive(Debug, Parser)]
#[command(name = "compeval", version)]
struct Cli {
    /// Pipeline config (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory for artifacts and manifests.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the event pool of every task.
    Generate,
    /// Build the five datasets and audit their splits.
    BuildTasks,
    /// Build the encoder corpus, train skip-gram and the sequence autoencoder.
    TrainEncoders,
    /// Encode every task sentence and import external vectors.
    Embed,
    /// Run the probing grid with random-vector controls.
    Probe,
    /// Render the final report.
    Report,
    /// Run one stage by name, or `all` for the full pipeline.
    Run {
        #[arg(long, default_value = "all")]
        stage: String,
    },
    /// Print the effective config as TOML.
    ShowConfig,
}

fn load_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn stages(command: &Command) -> anyhow::Result<Vec<Stage>> {
    Ok(match command {
        Command::Generate => vec![Stage::Generate],
        Command::BuildTasks => vec![Stage::BuildTasks],
        Command::TrainEncoders => vec![Stage::TrainEncoders],
        Command::Embed => vec![Stage::Embed],
        Command::Probe => vec![Stage::Probe],
        Command::Report => vec![Stage::Report],
        Command::Run { stage } if stage == "all" => Stage::ALL.to_vec(),
        Command::Run { stage } => vec![stage.parse()?],
        Command::ShowConfig => Vec::new(),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli)?;
    if let Command::ShowConfig = cli.command {
        print!("{}", toml::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let ws = Workspace::new(&cli.out);
    for stage in stages(&cli.command)? {
        let outcome = run_stage(stage, &cfg, &ws).with_context(|| format!("stage `{stage}`"))?;
        println!(
            "{stage}: {} outputs in {:.1}s (config {})",
            outcome.manifest.outputs.len(),
            outcome.elapsed.as_secs_f64(),
            &outcome.manifest.config_hash[..12]
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
