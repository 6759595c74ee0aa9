use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unisvm::kernel_approx::DEFAULT_DENSE_CAP;

use crate::model_file::Format;

#[derive(Debug, Parser)]
#[command(name = "unisvm", version, about = "Kernel SVM training with LS-DC losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it to disk.
    Train(TrainArgs),
    /// Write per-sample scores for a data file.
    Predict(PredictArgs),
    /// Score a model on labelled data.
    Eval(EvalArgs),
    /// Generate a synthetic data set in LIBSVM format.
    Synth(SynthArgs),
    /// Run a sweep of training jobs and emit one CSV row per job.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Class,
    Reg,
}

impl From<TaskArg> for unisvm::Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Class => unisvm::Task::Classification,
            TaskArg::Reg => unisvm::Task::Regression,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training data in LIBSVM format.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Loss name, optionally with inline parameters: `name:key=value,...`.
    #[arg(long)]
    pub loss: String,
    /// Extra loss parameters `key=value,...`, merged with inline ones.
    #[arg(long)]
    pub loss_params: Option<String>,
    #[arg(long, default_value_t = 1e-5, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Gaussian kernel width in `exp(-gamma ||x - z||^2)`.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// LS-DC constant; may only raise the loss's lower bound.
    #[arg(long = "A", allow_hyphen_values = true)]
    pub lsdc_constant: Option<f64>,
    #[arg(long, default_value = "auto")]
    pub solver: String,
    /// Rank cap of the pivoted Cholesky factor (default 1000).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Stop the factorization once trace(K - P P^T) < approx_tol * m.
    #[arg(long, default_value_t = unisvm::solver::DEFAULT_TRACE_TOL, allow_hyphen_values = true)]
    pub approx_tol: f64,
    #[arg(long, default_value_t = 1e-6, allow_hyphen_values = true)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Recorded for reproducible scripts; training itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model path.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: Format,
    /// Append a summary row to this CSV file.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Largest sample count for which the dense Gram matrix may be built.
    #[arg(long, env = "UNISVM_DENSE_CAP", default_value_t = DEFAULT_DENSE_CAP)]
    pub dense_cap: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV (`index,score[,label]`); standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Append a metrics row to this CSV file.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Checkerboard,
    Sinc,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    /// Number of checkerboard points.
    #[arg(long, default_value_t = 800)]
    pub n: usize,
    /// Checkerboard tiles per side (even).
    #[arg(long, default_value_t = 2)]
    pub grid: usize,
    #[arg(long, default_value_t = unisvm::data::SINC_X_MIN, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = unisvm::data::SINC_X_MAX, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = unisvm::data::SINC_STEP)]
    pub step: f64,
    /// Standard deviation of the sinc label noise.
    #[arg(long, default_value_t = unisvm::data::SINC_NOISE_STD, allow_hyphen_values = true)]
    pub noise: f64,
    /// Fraction of labels to flip (training file only when splitting).
    #[arg(long, allow_hyphen_values = true)]
    pub flip: Option<f64>,
    /// Training fraction; writes `<out>.train.<ext>` and `<out>.test.<ext>`.
    #[arg(long, allow_hyphen_values = true)]
    pub split: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sweep specification (TOML).
    #[arg(long)]
    pub sweep: PathBuf,
    /// Parallel worker slots.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output CSV; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
