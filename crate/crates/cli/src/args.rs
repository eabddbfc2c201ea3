use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use krr_deriv::simharness::GridSpec;

#[derive(Debug, Parser)]
#[command(name = "krr-deriv", version, about = "Derivative estimation with plug-in kernel ridge regression")]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to `x1,...,xd,y` data and write it as JSON.
    Fit(FitArgs),
    /// Evaluate derivatives (and variances) of a fitted model.
    Predict(PredictArgs),
    /// Select `lambda`, `sigma^2` (and the Matérn smoothness) without fitting.
    Tune(TuneArgs),
    /// Run a Monte Carlo study from a JSON config.
    Simulate(SimulateArgs),
    /// Run scaling checks, rate experiments and bound evaluations from a JSON config.
    Theory(TheoryArgs),
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Marginal-likelihood search grid `lo:hi:count` (log spaced).
    #[arg(long, value_parser = parse_grid)]
    pub lambda_grid: Option<GridSpec>,
    /// Matérn smoothness candidates for `--kernel matern`.
    #[arg(long, value_delimiter = ',')]
    pub nu_candidates: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub data: PathBuf,
    /// Kernel, e.g. `sobolev2`, `matern:2.5`, `rbf:0.2`, or `matern` with `--tune`.
    #[arg(long)]
    pub kernel: String,
    #[arg(long, required_unless_present = "tune", conflicts_with = "tune")]
    pub lambda: Option<f64>,
    /// Tune `lambda` and `sigma^2` by marginal likelihood.
    #[arg(long)]
    pub tune: bool,
    /// Noise variance; profiled from the data when omitted.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub model: PathBuf,
    /// Query points with header `x1,...,xd` (a trailing `y` column is ignored).
    pub query: PathBuf,
    /// Derivative orders: integers in one dimension, multi-indices like `1:0` otherwise.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k: Vec<String>,
    /// Also write the posterior variance of every requested derivative.
    #[arg(long)]
    pub variance: bool,
    #[arg(long, default_value = "predictions.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    pub data: PathBuf,
    #[arg(long)]
    pub kernel: String,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value = "tune.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    /// Use 100 replications regardless of the config.
    #[arg(long)]
    pub full: bool,
    /// Also write long-format files grouped for boxplots and curve plots.
    #[arg(long)]
    pub plotdata: bool,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    pub config: PathBuf,
}

pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:count, got `{s}`"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad lower end `{}`", parts[0]))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad upper end `{}`", parts[1]))?;
    let count: usize = parts[2].trim().parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
    let g = GridSpec { lo, hi, count };
    g.values().map_err(|e| e.to_string())?;
    Ok(g)
}
