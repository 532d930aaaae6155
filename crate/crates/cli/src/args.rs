use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cea", version, about = "Cellular EA with centric selection: experiments and analytics")]
pub struct Cli {
    /// Worker threads (default: available processors).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Takeover experiments under selection only.
    Takeover(TakeoverArgs),
    /// β sweep on a QAP or NK instance.
    Sweep(SweepArgs),
    /// Tabulate cumulative mating counts Σ_ij(T) over β.
    SigmaTable(SigmaArgs),
    /// Estimate P_ij per window and the optimal β trajectory.
    Pem(PemArgs),
    /// Reshape result files into per-figure plot series.
    Plotdata(PlotArgs),
    /// Execute a recipe file.
    Run(RunArgs),
}

#[derive(Debug, Args, Clone)]
pub struct BetaArgs {
    /// β values, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Inclusive grid start:stop:step.
    #[arg(long)]
    pub beta_grid: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct OutArgs {
    /// Output directory (default: $CEA_OUT_DIR, else ./out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct TakeoverArgs {
    /// Grid size as WxH.
    #[arg(long)]
    pub grid: String,
    #[command(flatten)]
    pub betas: BetaArgs,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generation cap (default 10 times the population size).
    #[arg(long)]
    pub cap: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Clone)]
#[group(required = true, multiple = false)]
pub struct ProblemArgs {
    /// QAPLIB instance file.
    #[arg(long)]
    pub qap: Option<PathBuf>,
    /// Fresh NK landscape as n,k,kind,seed (kind: adjacent or random).
    #[arg(long)]
    pub nk: Option<String>,
    /// NK landscape saved as JSON.
    #[arg(long)]
    pub nk_file: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub betas: BetaArgs,
    #[arg(long, default_value = "20x20")]
    pub grid: String,
    /// Replicates per β (default 30, or 200 with --full-scale).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Use 200 replicates per β.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long, default_value_t = 1500)]
    pub generations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep finished runs from an interrupted sweep in the output directory.
    #[arg(long)]
    pub resume: bool,
    /// Mann–Whitney comparison of two β values, as a,b.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Clone)]
pub struct SigmaArgs {
    #[arg(long, default_value = "20x20")]
    pub grid: String,
    #[command(flatten)]
    pub betas: BetaArgs,
    /// Horizon T.
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Pooled,
    RunMean,
}

#[derive(Debug, Args, Clone)]
pub struct PemArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Precomputed Σ table.
    #[arg(long, conflicts_with = "build_sigma", required_unless_present = "build_sigma")]
    pub sigma_table: Option<PathBuf>,
    /// Build the Σ table first (grid 0:1:0.01 unless --sigma-grid is given).
    #[arg(long)]
    pub build_sigma: bool,
    #[arg(long, default_value = "0:1:0.01")]
    pub sigma_grid: String,
    #[arg(long, default_value_t = 1000)]
    pub sigma_replicates: usize,
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,
    /// β range the table must cover, as start:stop.
    #[arg(long, default_value = "0:1")]
    pub beta_range: String,
    /// β of the instrumented runs (0.2 is the uniform binary tournament).
    #[arg(long, default_value_t = 0.2)]
    pub run_beta: f64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 1500)]
    pub generations: usize,
    #[arg(long, default_value = "20x20")]
    pub grid: String,
    #[arg(long, default_value_t = 50)]
    pub window: usize,
    #[arg(long, default_value_t = 1.0)]
    pub prior_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_b: f64,
    #[arg(long, value_enum, default_value_t = AggregationArg::Pooled)]
    pub aggregation: AggregationArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Clone)]
pub struct PlotArgs {
    /// Directories holding result files.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    pub recipe: PathBuf,
}
