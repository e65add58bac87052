//! `pulsenet`: dataset generation, training, evaluation, sweeps and checks.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pulsenet::resnet::Arithmetic;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<pulsenet::Error> for CliError {
    fn from(e: pulsenet::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

#[derive(Parser)]
#[command(name = "pulsenet", version, about = "Complex-valued ResNets for raw I/Q pulse classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled pulse dataset.
    Gen(GenArgs),
    /// Train a classifier and write checkpoint, history and evaluation report.
    Train(TrainArgs),
    /// Evaluate a checkpoint with randomized repeats.
    Eval(EvalArgs),
    /// Train and evaluate one model per input length D.
    #[command(name = "sweep-d")]
    SweepD(SweepArgs),
    /// Train the multi-label network and emit the error-versus-L curve.
    Multipulse(MultiPulseArgs),
    /// Finite-difference gradient checks for every layer.
    Gradcheck(GradcheckArgs),
    /// Print the layer table and parameter count of a model configuration.
    Summary(SummaryArgs),
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_hi: Option<f64>,
    /// Shortest pulse width in samples.
    #[arg(long)]
    pub nmin: Option<usize>,
    /// Longest pulse width in samples.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Training fraction of each class.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_arithmetic(s: &str) -> Result<Arithmetic, String> {
    Arithmetic::ALL
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| format!("expected one of real-1ch, iq-2ch, complex; got {s}"))
}

#[derive(Args, Default)]
pub struct ModelFlags {
    #[arg(long, value_parser = parse_arithmetic)]
    pub arithmetic: Option<Arithmetic>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Stage-1 width (complex channels for a complex model).
    #[arg(long)]
    pub width: Option<usize>,
    /// First-layer kernel size.
    #[arg(long)]
    pub kernel: Option<usize>,
    /// Network input length D.
    #[arg(long = "input-len")]
    pub input_len: Option<usize>,
}

#[derive(Args)]
pub struct TrainFlags {
    /// Center every pulse in the window.
    #[arg(long, conflicts_with = "async_mode")]
    pub sync: bool,
    /// Uniform random delay (the default).
    #[arg(long = "async")]
    pub async_mode: bool,
    /// Draw one augmentation per training pulse and reuse it every epoch.
    #[arg(long)]
    pub fixed_augmentation: bool,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Training seed (initial weights, shuffling, augmentation).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eval_repeats: Option<usize>,
    #[arg(long)]
    pub eval_seed: Option<u64>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory written by `gen`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Dataset directory; its test split is evaluated.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, conflicts_with = "async_mode")]
    pub sync: bool,
    #[arg(long = "async")]
    pub async_mode: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated input lengths.
    #[arg(long, value_delimiter = ',')]
    pub d_values: Option<Vec<usize>>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Args)]
pub struct MultiPulseArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated pulse counts evaluated for the curve.
    #[arg(long, value_delimiter = ',')]
    pub l_values: Option<Vec<usize>>,
    /// Number of classes in the scene family.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub train_scenes: Option<usize>,
    #[arg(long)]
    pub test_scenes: Option<usize>,
    #[arg(long)]
    pub eval_scenes: Option<usize>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Clone, Copy, clap::ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
    Both,
}

#[derive(Args)]
pub struct GradcheckArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub precision: PrecisionArg,
    /// Randomized shapes per layer.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SummaryArgs {
    /// A model configuration, or a run configuration with a `model` section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::SweepD(a) => commands::sweep_d(a),
        Command::Multipulse(a) => commands::multipulse(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Summary(a) => commands::summary(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
