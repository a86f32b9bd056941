use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "snefy", version, about = "Label distribution learning with conditional SNEFY densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parse and validate a dataset.
    Validate(ValidateArgs),
    /// Seeded shuffled split into train/test or train/calib/test files.
    Split(SplitArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Train a model by maximum likelihood.
    Train(TrainArgs),
    /// Evaluate the conditional-mean predictor of a saved model.
    Eval(EvalArgs),
    /// Split-conformal calibration with FSC reporting.
    Conformal(ConformalArgs),
    /// One active-learning round per acquisition strategy.
    Active(ActiveArgs),
    /// Per-sample differential entropy of a saved model.
    Entropy(EntropyArgs),
    /// Bagging with uniform and density-weighted combination.
    Ensemble(EnsembleArgs),
    /// FSC as a function of one hyperparameter.
    Sweep(SweepArgs),
    /// Replay a run from its manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Split(_) => "split",
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Conformal(_) => "conformal",
            Command::Active(_) => "active",
            Command::Entropy(_) => "entropy",
            Command::Ensemble(_) => "ensemble",
            Command::Sweep(_) => "sweep",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for reports and the run manifest.
    #[arg(long, default_value = "reports")]
    pub report_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// CSV with header f0..f{d-1},l0..l{L-1}.
    #[arg(long)]
    pub data: PathBuf,
    /// Expected feature count (inferred from the header when omitted).
    #[arg(long)]
    pub d: Option<usize>,
    /// Expected label count (inferred from the header when omitted).
    #[arg(long)]
    pub l: Option<usize>,
    /// Rescale label rows that do not sum to 1 instead of rejecting them.
    #[arg(long)]
    pub renormalize: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Hyper {
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Mini-batch size (default 16, or 64 for conformal runs).
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Hidden width.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Readout width.
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    /// Feature-map width (defaults to the hidden width).
    #[arg(long)]
    pub d2: Option<usize>,
    /// adam or sgd.
    #[arg(long, default_value = "adam")]
    pub optimizer: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: Common,
    /// Part proportions; two parts give train/test, three train/calib/test.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Use the 50/25/25 train/calib/test default.
    #[arg(long)]
    pub conformal: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Samples from a random SNEFY model with nonnegative readout.
    Teacher,
    /// Two regions with concentrated and maximally spread labels (d=2, L=3).
    Heteroscedastic,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "teacher")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub l: usize,
    /// Teacher hidden width.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Teacher readout width.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: Hyper,
    #[command(flatten)]
    pub common: Common,
    /// Model file (default <report-dir>/model.snefy).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model_in: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Snefy,
    Dirichlet,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: Hyper,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.9)]
    pub level: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    pub bin_sizes: Vec<usize>,
    /// Train/calib/test proportions.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.25")]
    pub ratios: Vec<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub method: Method,
}

#[derive(Debug, Args, Serialize)]
pub struct ActiveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: Hyper,
    #[command(flatten)]
    pub common: Common,
    /// Held-out test file (default: a seeded 10% of --data).
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 400)]
    pub n_initial: usize,
    #[arg(long, default_value_t = 100)]
    pub n_query: usize,
    /// Importance samples per pool point.
    #[arg(long, default_value_t = 1000)]
    pub n_iter: usize,
    /// snefy-entropy, dirichlet-entropy, random, kmeans or all.
    #[arg(long, default_value = "all")]
    pub strategy: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model_in: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Average,
    Weighted,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: Hyper,
    #[command(flatten)]
    pub common: Common,
    /// Held-out test file (default: a seeded 10% of --data).
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    pub n_base: usize,
    #[arg(long, default_value_t = 50)]
    pub n_sample: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    N,
    M,
    BatchSize,
    Epochs,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: Hyper,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<usize>,
    #[arg(long, default_value_t = 0.9)]
    pub level: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    pub bin_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.25")]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Replacement report directory (default: the recorded one).
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
}
