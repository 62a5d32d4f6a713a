//! `nalm`: train, sweep and inspect neural arithmetic modules.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalm_core::evaluation::Precision;
use nalm_core::experiment::{Preset, Variant};
use nalm_core::nalm::ModuleKind;
use nalm_core::training::LossKind;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NALM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "nalm",
    version,
    about = "Train and evaluate neural arithmetic modules on division tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one module and write its evaluation trace.
    Train(TrainArgs),
    /// Run a multi-seed sweep over a preset; resumes from existing results.
    Sweep(SweepArgs),
    /// Write an RMSE surface of a two-layer NAU network as CSV.
    Landscape(LandscapeArgs),
    /// Check analytic gradients against finite differences.
    VerifyGrad(VerifyGradArgs),
    /// Print golden-solution thresholds for the division-by-small-values tasks.
    Thresholds(ThresholdArgs),
    /// Summarise a results CSV.
    Report(ReportArgs),
}

/// Settings shared by `train` and `sweep` that override configured values.
#[derive(Debug, Args, Default)]
struct TrainOverrides {
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    val_samples: Option<usize>,
    #[arg(long)]
    test_samples: Option<usize>,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Mse,
    Pcc,
    Mape,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Mse => LossKind::Mse,
            LossArg::Pcc => LossKind::Pcc,
            LossArg::Mape => LossKind::Mape,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training config (TOML). Without it the run comes from --preset/--variant/--range.
    #[arg(long, conflicts_with_all = ["preset", "variant", "range"])]
    config: Option<PathBuf>,
    #[arg(long, default_value = "no_redundancy")]
    preset: Preset,
    #[arg(long, default_value = "nru")]
    variant: Variant,
    /// Interpolation range label of a preset task.
    #[arg(long, default_value = "U[1,2)")]
    range: String,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: TrainOverrides,
    /// Trace CSV path. Defaults to `<out-dir>/train-<name>-seed<seed>-trace.csv`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Run record JSON path. Defaults next to the trace.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "nalm-out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep spec (TOML). Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    /// Variants to run, comma separated (e.g. `nru,real-npu`).
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<Variant>,
    /// Range label to keep; repeat for several.
    #[arg(long)]
    ranges: Vec<String>,
    /// Number of seeds, run as `0..N`.
    #[arg(long)]
    seeds: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    overrides: TrainOverrides,
    /// Output directory for results.csv and summary.csv.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LandscapeArgs {
    #[arg(long, value_parser = ["real-npu", "nru", "nmru"])]
    kind: String,
    /// Grid points per axis.
    #[arg(long, default_value_t = nalm_core::landscape::DEFAULT_RESOLUTION)]
    res: usize,
    /// Stability term (defaults to the surface's usual value).
    #[arg(long)]
    eps: Option<f64>,
    /// CSV path. Defaults to `<out-dir>/landscape-<kind>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "nalm-out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyGradArgs {
    /// Module kind; all kinds when omitted.
    #[arg(long)]
    kind: Option<ModuleKind>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long, value_delimiter = ',', default_value = "real-npu,nru,nmru")]
    kinds: Vec<ModuleKind>,
    /// Test-set size per task.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = nalm_core::nalm::DEFAULT_EPS)]
    eps: f64,
    #[arg(long, value_enum, default_value = "f32")]
    precision: PrecisionArg,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A results CSV, or a sweep directory containing results.csv.
    results: PathBuf,
    /// Also write the summary as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Landscape(a) => commands::landscape(a),
        Command::VerifyGrad(a) => commands::verify_grad(a),
        Command::Thresholds(a) => commands::thresholds(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
