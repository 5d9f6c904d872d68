//! `noisydmd` command-line driver.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "noisydmd", version, about = "Noise-robust DMD experiments: generate, corrupt, filter, fit, evaluate, sweep and plot")]
pub struct Cli {
    /// JSON file whose keys mirror the experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for pipeline and sweep runs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for independent experiment cells.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress informational output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one of the PDEs and write the snapshot matrix.
    Generate(GenerateArgs),
    /// Add white Gaussian noise at a target SNR.
    Corrupt(CorruptArgs),
    /// Denoise a snapshot matrix with RPCA or the TLS projection.
    Filter(FilterArgs),
    /// Fit a DMD model and write it as JSON.
    Fit(FitArgs),
    /// Reconstruct from a model and score it against ground truth.
    Evaluate(EvaluateArgs),
    /// Run every (method, SNR, seed) cell and write per-cell metrics.
    Pipeline(RunArgs),
    /// Pipeline plus per-method means over seeds at each SNR.
    Sweep(RunArgs),
    /// Render a CSV or snapshot file as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Nlse,
    Fne,
    Swe,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    pub dataset: DatasetArg,
    /// Spatial points (FNE) or cells along x (SWE).
    #[arg(long)]
    pub nx: Option<usize>,
    /// Cells along y (SWE).
    #[arg(long)]
    pub ny: Option<usize>,
    /// Spatial points (NLSE); must be a power of two.
    #[arg(long)]
    pub nw: Option<usize>,
    /// Number of snapshots.
    #[arg(long)]
    pub nt: Option<usize>,
    /// Final time.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// FNE: keep only V instead of stacking V over W.
    #[arg(long)]
    pub v_only: bool,
    /// Also write the snapshots as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CorruptArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "clean")]
    pub snr_db: Option<f64>,
    #[arg(long, env = "NOISYDMD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Infinite SNR: copy the input unchanged.
    #[arg(long)]
    pub clean: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FilterMethod {
    Adm,
    Ialm,
    Tls,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub method: FilterMethod,
    /// Truncation rank for the TLS projection (`auto` or a number).
    #[arg(long)]
    pub rank: Option<String>,
    /// Per-iteration RPCA diagnostics as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// `auto` (energy rule) or a fixed truncation rank.
    #[arg(long, default_value = "auto")]
    pub rank: String,
    /// Total-least-squares DMD instead of exact DMD.
    #[arg(long)]
    pub tls: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Clean snapshot matrix used as ground truth.
    #[arg(long)]
    pub truth: PathBuf,
    /// Filtered data whose numerical rank is reported.
    #[arg(long)]
    pub filtered: Option<PathBuf>,
    /// Metrics CSV row (appended to a fresh file).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Relative error per snapshot time as `t,epsilon`.
    #[arg(long)]
    pub eps: Option<PathBuf>,
    /// Reconstruction written as a snapshot file.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Extend the written reconstruction by this many steps past the last snapshot.
    #[arg(long, default_value_t = 0)]
    pub forecast: usize,
    #[arg(long, default_value = "")]
    pub dataset: String,
    #[arg(long, default_value = "none")]
    pub method: String,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: Option<DatasetArg>,
    /// SNR values in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Methods among none, adm, ialm, tls, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub rank: Option<String>,
    /// Skip corruption (infinite SNR).
    #[arg(long)]
    pub clean: bool,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub nw: Option<usize>,
    #[arg(long)]
    pub nt: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Surface,
    Sweep,
    #[value(name = "error_t", alias = "error-t")]
    ErrorT,
    #[value(name = "rank_bar", alias = "rank-bar")]
    RankBar,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long)]
    pub kind: PlotKind,
    /// Input files: a snapshot file (surface), summary CSV (sweep),
    /// one or more `t,epsilon` CSVs (error_t) or a metrics CSV (rank_bar).
    #[arg(long, short, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Snapshot column for 2-D surface plots.
    #[arg(long, default_value_t = 0)]
    pub column: usize,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
