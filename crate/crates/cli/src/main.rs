//! `twostage` command-line front-end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use twostage::pipeline::{run, write_outputs, write_reports, ConfigError, ModelArtifact, PipelineError};
use twostage::synth::{generate, SynthConfig};
use twostage::{ModelSelector, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "twostage", version, about = "Two-stage hybrid scoring: neural pair features feeding a stepwise logistic model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit both model paths and write reports plus the model artifact.
    Run(RunArgs),
    /// Score a CSV with a saved model artifact.
    Score(ScoreArgs),
    /// Generate a synthetic dataset with a planted pairwise interaction.
    Synth(SynthArgs),
    /// Re-render the report tables from a saved artifact.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    positive_label: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Model artifact written by `run`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Model to apply: `two:1` (default), `two:full`, `one:3`, ...
    #[arg(long, default_value = "two:1")]
    select: ModelSelector,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().n_rows)]
    n_rows: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_linear)]
    n_linear: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_noise)]
    n_noise: usize,
    #[arg(long, default_value_t = SynthConfig::default().linear_weight)]
    linear_weight: f64,
    #[arg(long, default_value_t = SynthConfig::default().interaction_strength)]
    interaction_strength: f64,
    #[arg(long, default_value_t = SynthConfig::default().sharpness)]
    sharpness: f64,
    #[arg(long, default_value_t = SynthConfig::default().offset, allow_hyphen_values = true)]
    offset: f64,
    #[arg(long, default_value_t = SynthConfig::default().event_rate)]
    event_rate: f64,
    #[arg(long, default_value_t = SynthConfig::default().missing_rate)]
    missing_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
}

fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn build_config(args: RunArgs) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::from_path(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.input {
        cfg.input = v;
    }
    if let Some(v) = args.output_dir {
        cfg.output_dir = v;
    }
    if let Some(v) = args.target {
        cfg.target = v;
    }
    if let Some(v) = args.positive_label {
        cfg.positive_label = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.fraction {
        cfg.fraction = v;
    }
    if let Some(v) = args.top_n {
        cfg.top_n = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if cfg.input.as_os_str().is_empty() {
        return Err(ConfigError::Invalid {
            field: "input",
            message: "no input file given".into(),
        }
        .into());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), PipelineError> {
    let cfg = build_config(args)?;
    info!("fitting on {}", cfg.input.display());
    let artifact = run(&cfg)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(io_error(&cfg.output_dir))?;
    let written = write_outputs(&artifact, &cfg.output_dir)?;
    info!("wrote {} files to {}", written.len(), cfg.output_dir.display());
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<(), PipelineError> {
    let artifact = ModelArtifact::load(&args.model)?;
    let scores = artifact.score_csv(&args.input, &args.select)?;
    let sink: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(io_error(path))?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let target = args.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    twostage::pipeline::write_scores(&scores, sink).map_err(|e| PipelineError::Io {
        path: target,
        source: e.into(),
    })?;
    info!("scored {} rows with {}", scores.len(), args.select);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), PipelineError> {
    let cfg = SynthConfig {
        n_rows: args.n_rows,
        n_linear: args.n_linear,
        n_noise: args.n_noise,
        linear_weight: args.linear_weight,
        interaction_strength: args.interaction_strength,
        sharpness: args.sharpness,
        offset: args.offset,
        event_rate: args.event_rate,
        missing_rate: args.missing_rate,
        seed: args.seed,
    };
    let frame = generate(&cfg)?;
    frame.write_csv_path(&args.output)?;
    info!("wrote {} rows to {}", frame.n_rows(), args.output.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), PipelineError> {
    let artifact = ModelArtifact::load(&args.model)?;
    let written = write_reports(&artifact, &args.output_dir)?;
    info!("wrote {} report files to {}", written.len(), args.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
