use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Dirichlet-evidence multi-view classification: training, evaluation,
/// divergences and opinion fusion. Every command prints one JSON document
/// on stdout.
#[derive(Debug, Parser)]
#[command(name = "evifuse", version)]
pub struct Cli {
    /// Report failures as {"error": kind, "detail": message} on stdout.
    #[arg(long, global = true)]
    pub json_errors: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (manifest + CSVs) to a directory.
    GenData(GenDataArgs),
    /// Train on the train split and report test metrics.
    Train(TrainArgs),
    /// Evaluate a checkpoint.
    Eval(EvalArgs),
    /// Closed-form divergence between two Dirichlets with a numerical oracle.
    Divergence(DivergenceArgs),
    /// Combine opinions read from a JSON file.
    Fuse(FuseArgs),
    /// Accuracy and uncertainty under Gaussian noise of increasing variance.
    SweepNoise(SweepNoiseArgs),
    /// Retrain over a grid of Hölder exponents.
    SweepGamma(SweepGammaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegularizerArg {
    Holder,
    Kl,
    Cs,
}

/// Flags shared by every command that builds an experiment. They override
/// the values from `--config`.
#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Experiment config (JSON). Without it the built-in toy task is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset manifest; replaces the config's data source.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Seed for the split, initialisation and batch order.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Regulariser used in training.
    #[arg(long, value_enum)]
    pub regularizer: Option<RegularizerArg>,
    /// Hölder exponent (> 1) for the holder regulariser.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Epochs over which the regulariser weight ramps from 0 to 1.
    #[arg(long)]
    pub t_anneal: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Hidden widths of each view network, e.g. 16 or 32,16.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Drop the pseudo-view network.
    #[arg(long)]
    pub no_pseudo: bool,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    /// Noise standard deviation applied to every view.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Seed of the generator (defaults to the config's).
    #[arg(long)]
    pub data_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Where to write the checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Test,
    Train,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Checkpoint written by `train --out`.
    #[arg(long)]
    pub model: PathBuf,
    /// Part of the dataset to evaluate, using the config's split.
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivergenceArg {
    Holder,
    Kl,
    Cs,
    Js,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[arg(long, value_enum)]
    pub kind: DivergenceArg,
    /// Hölder exponent (> 1); required for holder.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Concentration of p as comma-separated decimals.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "p_file", required_unless_present = "p_file")]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "q_file", required_unless_present = "q_file")]
    pub q: Option<Vec<f64>>,
    /// JSON array holding the concentration of p.
    #[arg(long)]
    pub p_file: Option<PathBuf>,
    #[arg(long)]
    pub q_file: Option<PathBuf>,
    /// Exit with status 1 when the closed form and the oracle disagree.
    #[arg(long)]
    pub validate: bool,
    /// Monte Carlo sample count (Jensen–Shannon and oracles for K > 3).
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    /// Subinterval cap of each adaptive quadrature.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    /// Monte Carlo seed (defaults to EVIFUSE_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// JSON array of {"beliefs": [...], "uncertainty": u} objects.
    #[arg(long)]
    pub opinions: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseTargetArg {
    Test,
    TrainAndTest,
}

#[derive(Debug, Args)]
pub struct SweepNoiseArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Noise variances, e.g. 0,0.01,0.02,0.05.
    #[arg(long, value_delimiter = ',')]
    pub variances: Option<Vec<f64>>,
    /// Index of the view to corrupt, or "all".
    #[arg(long)]
    pub view: Option<String>,
    #[arg(long, value_enum)]
    pub target: Option<NoiseTargetArg>,
    /// Mirrored noise pairs averaged per variance.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepGammaArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Exponents to train with, e.g. 1.2,1.5,1.7,1.9,2.0.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}
