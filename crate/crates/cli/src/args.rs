use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "sbnd", version, about = "Syndrome-based neural decoding toolkit", args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for evaluation (default: available parallelism).
    #[arg(long, global = true, env = "SBND_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a code and report its parameters and invariant checks.
    CodeInfo(CodeArgs),
    /// Train a bit-flip estimator and write a checkpoint.
    Train(TrainArgs),
    /// Run a Monte Carlo BER/FER sweep.
    Eval(EvalArgs),
    /// Render an SVG from a results CSV.
    Plot(PlotArgs),
}

pub const SUBCOMMANDS: [&str; 4] = ["code-info", "train", "eval", "plot"];

#[derive(Args, Debug, Clone)]
pub struct CodeArgs {
    /// Polar code length and dimension.
    #[arg(long, num_args = 2, value_names = ["N", "K"], conflicts_with = "pc_file")]
    pub polar: Option<Vec<usize>>,

    /// Erasure probability for the Bhattacharyya frozen-set design.
    #[arg(long, conflicts_with = "info_set")]
    pub epsilon: Option<f64>,

    /// Explicit polar row indices (0-based, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub info_set: Option<Vec<usize>>,

    /// Parity-check matrix file (plain 0/1 text or alist).
    #[arg(long)]
    pub pc_file: Option<PathBuf>,

    /// Keep H as constructed instead of row-reducing it.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub code: CodeArgs,

    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,

    #[arg(long, default_value_t = 4096)]
    pub batch_size: usize,

    /// Training Eb/N0 in dB.
    #[arg(long, default_value_t = 3.0)]
    pub ebn0: f64,

    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,

    /// Hidden width multiplier M.
    #[arg(long, default_value_t = 6)]
    pub scale: usize,

    /// GRU time steps T.
    #[arg(long, default_value_t = 5)]
    pub time_steps: usize,

    /// Stacked GRU cells D.
    #[arg(long, default_value_t = 5)]
    pub depth: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 100)]
    pub log_every: usize,

    #[arg(long, default_value = "sbnd.ckpt")]
    pub checkpoint: PathBuf,

    /// CSV file for the (step, loss) log.
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub code: CodeArgs,

    /// Decoders: hard, osd<order>, map, map-bit, sbnd (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "hard")]
    pub decoder: Vec<String>,

    /// Estimator checkpoint, required by the sbnd decoder.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,

    /// Eb/N0 values in dB: `start:step:end` or a comma list.
    #[arg(long, default_value = "0:1:6")]
    pub ebn0: String,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 300)]
    pub target_errors: u64,

    #[arg(long, default_value_t = 10_000)]
    pub min_frames: u64,

    #[arg(long, default_value_t = 10_000_000)]
    pub max_frames: u64,

    /// Results CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also render the curves to this SVG file.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Results CSV written by `eval`.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub out: PathBuf,
}
