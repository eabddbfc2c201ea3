use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{stream_rng, HOLDER_TARGET_GRID, HOLDER_TARGET_TERMS};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::spectral::{unit_grid, FeatureKrr, HolderFunction, SpectralKernel};
use crate::stats;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct RateOptions {
    pub sigma: f64,
    /// Truncation of the regression kernel.
    pub kernel_terms: usize,
    /// Equispaced points used for the L2 error.
    pub grid: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { sigma: 0.1, kernel_terms: 256, grid: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub k: usize,
    pub alpha: f64,
    pub n_values: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Mean over replications of `log ||f_hat^(k) - f_0^(k)||_2`.
    pub mean_log_error: Vec<f64>,
    pub slope: f64,
    pub slope_se: f64,
    /// `(alpha - k) / (2 alpha + 1)`.
    pub theoretical_slope: f64,
}

/// `lambda(n) = (log n / n)^{2 alpha / (2 alpha + 1)}`.
pub fn rate_lambda(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    (n.ln() / n).powf(2.0 * alpha / (2.0 * alpha + 1.0))
}

fn observe(f0: &HolderFunction<f64>, n: usize, sigma: f64, seed: u64, rep: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(seed, &[n as u64, rep as u64]);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y = x
        .iter()
        .map(|&xi| {
            let e: f64 = rng.sample(StandardNormal);
            f0.eval_deriv(0, xi) + sigma * e
        })
        .collect();
    (x, y)
}

fn grid_rmse(features: &Matrix<f64>, coef: &[f64], truth: &[f64]) -> Result<f64> {
    stats::rmse(&features.matvec(coef)?, truth)
}

/// Convergence-rate experiment for one derivative order.
pub fn run_rate_experiment(k: usize, alpha: f64, n_values: &[usize], replications: usize, seed: u64) -> Result<RateFit> {
    let mut fits = run_rate_experiments(&[k], alpha, n_values, replications, seed, &RateOptions::default())?;
    Ok(fits.remove(0))
}

/// Convergence-rate experiment for several orders sharing the same data and fits.
pub fn run_rate_experiments(
    orders: &[usize],
    alpha: f64,
    n_values: &[usize],
    replications: usize,
    seed: u64,
    opts: &RateOptions,
) -> Result<Vec<RateFit>> {
    if orders.is_empty() {
        return Err(Error::InvalidParameter("no derivative orders requested".into()));
    }
    if n_values.len() < 4 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n_values must be strictly increasing with at least 4 entries".into()));
    }
    if n_values[0] < 2 || (n_values[n_values.len() - 1] as f64) < 10.0 * n_values[0] as f64 {
        return Err(Error::InvalidParameter("n_values must span at least one decade".into()));
    }
    if replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    let kernel = SpectralKernel::new(alpha, opts.kernel_terms)?;
    for &k in orders {
        kernel.check_order(k)?;
    }
    let f0 = HolderFunction::standard(alpha, HOLDER_TARGET_TERMS, HOLDER_TARGET_GRID)?;
    let grid: Vec<f64> = unit_grid(opts.grid);
    let features: Vec<Matrix<f64>> = orders.iter().map(|&k| kernel.feature_matrix(&grid, k)).collect();
    let truth: Vec<Vec<f64>> = orders.iter().map(|&k| grid.iter().map(|&x| f0.eval_deriv(k, x)).collect()).collect();
    let lambdas: Vec<f64> = n_values.iter().map(|&n| rate_lambda(n, alpha)).collect();

    let tasks: Vec<(usize, usize)> =
        (0..n_values.len()).flat_map(|i| (0..replications).map(move |r| (i, r))).collect();
    // log errors indexed [task][order]
    let errors: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(i, rep)| {
            let (x, y) = observe(&f0, n_values[i], opts.sigma, seed, rep);
            let coef = FeatureKrr::new(&kernel, &x, &y)?.coefficients(lambdas[i])?;
            (0..orders.len())
                .map(|o| grid_rmse(&features[o], &coef, &truth[o]).map(f64::ln))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let abscissa: Vec<f64> = n_values.iter().map(|&n| ((n as f64).ln() / n as f64).ln()).collect();
    orders
        .iter()
        .enumerate()
        .map(|(o, &k)| {
            let mean_log_error: Vec<f64> = (0..n_values.len())
                .map(|i| {
                    let v: Vec<f64> = (0..replications).map(|r| errors[i * replications + r][o]).collect();
                    stats::mean(&v).expect("replications >= 1")
                })
                .collect();
            let fit = stats::fit_line(&abscissa, &mean_log_error)?;
            Ok(RateFit {
                k,
                alpha,
                n_values: n_values.to_vec(),
                lambdas: lambdas.clone(),
                mean_log_error,
                slope: fit.slope,
                slope_se: fit.slope_se,
                theoretical_slope: (alpha - k as f64) / (2.0 * alpha + 1.0),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivityOptions {
    pub sigma: f64,
    pub kernel_terms: usize,
    pub grid: usize,
    pub lambda_grid: Vec<f64>,
}

/// Quarter-decade points `10^{-j/4}` on `[1e-9, 1]`.
pub fn quarter_decade_grid() -> Vec<f64> {
    (0..=36).rev().map(|j| 10f64.powf(-(j as f64) / 4.0)).collect()
}

impl Default for AdaptivityOptions {
    fn default() -> Self {
        Self { sigma: 0.1, kernel_terms: 128, grid: 400, lambda_grid: quarter_decade_grid() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptivityReport {
    pub alpha: f64,
    pub n: usize,
    pub replications: usize,
    pub orders: Vec<usize>,
    pub lambda_grid: Vec<f64>,
    /// `[order][lambda]` RMSE averaged over replications.
    pub mean_rmse: Vec<Vec<f64>>,
    /// Grid index minimizing the averaged RMSE, per order.
    pub argmin_index: Vec<usize>,
    pub argmin_lambda: Vec<f64>,
    /// Per-replication minimizing indices, `[order][rep]`.
    pub replication_argmin: Vec<Vec<usize>>,
    /// `max - min` of `argmin_index` across orders, in grid cells.
    pub spread_cells: usize,
}

pub fn run_adaptivity_check(alpha: f64, n: usize, replications: usize, seed: u64) -> Result<AdaptivityReport> {
    run_adaptivity_check_with(alpha, n, replications, seed, &AdaptivityOptions::default())
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Scans `lambda` for `k = 0, 1, 2` on shared data and compares where the
/// RMSE curves bottom out.
pub fn run_adaptivity_check_with(
    alpha: f64,
    n: usize,
    replications: usize,
    seed: u64,
    opts: &AdaptivityOptions,
) -> Result<AdaptivityReport> {
    let orders = vec![0, 1, 2];
    if opts.lambda_grid.is_empty() {
        return Err(Error::EmptyGrid("lambda"));
    }
    if opts.lambda_grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter("lambda grid values must be positive".into()));
    }
    if replications == 0 || n < 2 {
        return Err(Error::InvalidParameter("need n >= 2 and at least one replication".into()));
    }
    let kernel = SpectralKernel::new(alpha, opts.kernel_terms)?;
    kernel.check_order(2)?;
    let f0 = HolderFunction::standard(alpha, HOLDER_TARGET_TERMS, HOLDER_TARGET_GRID)?;
    let grid: Vec<f64> = unit_grid(opts.grid);
    let features: Vec<Matrix<f64>> = orders.iter().map(|&k| kernel.feature_matrix(&grid, k)).collect();
    let truth: Vec<Vec<f64>> = orders.iter().map(|&k| grid.iter().map(|&x| f0.eval_deriv(k, x)).collect()).collect();

    // [rep][order][lambda]
    let curves: Vec<Vec<Vec<f64>>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let (x, y) = observe(&f0, n, opts.sigma, seed, rep);
            let primal = FeatureKrr::new(&kernel, &x, &y)?;
            let mut out = vec![Vec::with_capacity(opts.lambda_grid.len()); orders.len()];
            for &l in &opts.lambda_grid {
                let coef = primal.coefficients(l)?;
                for o in 0..orders.len() {
                    out[o].push(grid_rmse(&features[o], &coef, &truth[o])?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let r = replications as f64;
    let mean_rmse: Vec<Vec<f64>> = (0..orders.len())
        .map(|o| (0..opts.lambda_grid.len()).map(|j| curves.iter().map(|c| c[o][j]).sum::<f64>() / r).collect())
        .collect();
    let argmin_index: Vec<usize> = mean_rmse.iter().map(|c| argmin(c)).collect();
    let replication_argmin = (0..orders.len()).map(|o| curves.iter().map(|c| argmin(&c[o])).collect()).collect();
    let spread_cells = argmin_index.iter().max().unwrap() - argmin_index.iter().min().unwrap();
    Ok(AdaptivityReport {
        alpha,
        n,
        replications,
        argmin_lambda: argmin_index.iter().map(|&i| opts.lambda_grid[i]).collect(),
        orders,
        lambda_grid: opts.lambda_grid.clone(),
        mean_rmse,
        argmin_index,
        replication_argmin,
        spread_cells,
    })
}
