use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{generate_with, stream_seed, Method, SimulationConfig, Truth};
use crate::baselines::{cv_bandwidth, default_bandwidth_grid, locpoly_deriv, BandwidthChoice, LocalPolyConfig};
use crate::error::{Error, Result};
use crate::estimator::FittedKrr;
use crate::kernels::{KernelSpec, MultiIndex};
use crate::linalg::Matrix;
use crate::spectral::unit_grid;
use crate::stats;
use crate::tuning::{
    default_lambda_grid, lml_from_gram, loo_mse_gram, profile_sigma2, tune_mmle_gram, tune_nu, TuneResult,
    DEFAULT_NU_CANDIDATES,
};

/// One `(method, k, replication)` outcome. `lambda` holds the bandwidth for
/// local polynomial rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseRow {
    pub method: String,
    pub target: String,
    pub k: usize,
    pub rep: usize,
    pub rmse: Option<f64>,
    pub lambda: Option<f64>,
    pub sigma2: Option<f64>,
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodFailure {
    pub method: String,
    /// `None` when the whole method failed for the replication.
    pub k: Option<usize>,
    pub rep: usize,
    pub message: String,
}

/// Estimated and true derivative on the evaluation grid (first replication only).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub method: String,
    pub target: String,
    pub k: usize,
    pub x: f64,
    pub estimate: Option<f64>,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub target: String,
    pub k: usize,
    pub count: usize,
    pub missing: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub target: String,
    pub design: String,
    /// Ordered by method (config order), then `k`, then replication.
    pub rows: Vec<RmseRow>,
    pub failures: Vec<MethodFailure>,
    pub curves: Vec<CurveRow>,
}

impl RmseReport {
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: Vec<SummaryRow> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for r in &self.rows {
            let pos = groups.iter().position(|g| g.method == r.method && g.k == r.k);
            let i = pos.unwrap_or_else(|| {
                groups.push(SummaryRow {
                    method: r.method.clone(),
                    target: r.target.clone(),
                    k: r.k,
                    count: 0,
                    missing: 0,
                    median: None,
                    q1: None,
                    q3: None,
                });
                values.push(Vec::new());
                groups.len() - 1
            });
            match r.rmse {
                Some(v) => {
                    groups[i].count += 1;
                    values[i].push(v);
                }
                None => groups[i].missing += 1,
            }
        }
        for (g, v) in groups.iter_mut().zip(&values) {
            g.median = stats::median(v);
            g.q1 = stats::quantile(v, 0.25);
            g.q3 = stats::quantile(v, 0.75);
        }
        groups
    }

    /// Median RMSE of `method` at order `k` over non-missing rows.
    pub fn median_rmse(&self, method: &str, k: usize) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.method == method && r.k == k).filter_map(|r| r.rmse).collect();
        stats::median(&v)
    }

    /// Methods without a single non-missing row.
    pub fn fully_failed_methods(&self) -> Vec<String> {
        let mut seen: Vec<(String, bool)> = Vec::new();
        for r in &self.rows {
            match seen.iter_mut().find(|(m, _)| *m == r.method) {
                Some(e) => e.1 |= r.rmse.is_some(),
                None => seen.push((r.method.clone(), r.rmse.is_some())),
            }
        }
        seen.into_iter().filter(|(_, ok)| !ok).map(|(m, _)| m).collect()
    }
}

struct Setup {
    truth: Truth,
    methods: Vec<Method>,
    method_names: Vec<String>,
    grid: Vec<f64>,
    grid_matrix: Matrix<f64>,
    truth_grid: Vec<Vec<f64>>,
    lambda_grid: Vec<f64>,
    nu_candidates: Vec<f64>,
    bandwidth_grid: Vec<f64>,
}

#[derive(Default)]
struct RepOutput {
    /// Indexed `[method][order]`.
    rows: Vec<Vec<RmseRow>>,
    failures: Vec<MethodFailure>,
    curves: Vec<CurveRow>,
}

/// Runs every replication (in parallel) and folds the results in
/// replication order.
pub fn run_montecarlo(cfg: &SimulationConfig) -> Result<RmseReport> {
    cfg.validate()?;
    let truth = Truth::new(cfg.target)?;
    let methods = cfg.parsed_methods()?;
    let grid: Vec<f64> = unit_grid(cfg.eval_grid);
    let truth_grid = cfg
        .orders
        .iter()
        .map(|&k| grid.iter().map(|&x| truth.eval(k, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let setup = Setup {
        truth,
        method_names: methods.iter().map(|m| m.to_string()).collect(),
        methods,
        grid_matrix: Matrix::column(&grid),
        grid,
        truth_grid,
        lambda_grid: match &cfg.lambda_grid {
            Some(g) => g.values()?,
            None => default_lambda_grid(),
        },
        nu_candidates: cfg.nu_candidates.clone().unwrap_or_else(|| DEFAULT_NU_CANDIDATES.to_vec()),
        bandwidth_grid: match &cfg.bandwidth_grid {
            Some(g) => g.values()?,
            None => default_bandwidth_grid(),
        },
    };

    let outputs: Vec<RepOutput> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, &setup, rep))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(outputs.len() * setup.methods.len() * cfg.orders.len());
    for mi in 0..setup.methods.len() {
        for ki in 0..cfg.orders.len() {
            rows.extend(outputs.iter().map(|o| o.rows[mi][ki].clone()));
        }
    }
    let mut failures = Vec::new();
    let mut curves = Vec::new();
    for o in outputs {
        failures.extend(o.failures);
        curves.extend(o.curves);
    }
    Ok(RmseReport { target: cfg.target.name(), design: cfg.design.name().into(), rows, failures, curves })
}

fn run_replication(cfg: &SimulationConfig, s: &Setup, rep: usize) -> Result<RepOutput> {
    let (x, y) = generate_with(cfg, &s.truth, rep)?;
    let target = cfg.target.name();
    let max_k = cfg.orders.iter().copied().max().unwrap_or(0);
    let mut out = RepOutput::default();
    for (mi, method) in s.methods.iter().enumerate() {
        let name = &s.method_names[mi];
        let row = |k: usize, rmse, lambda, sigma2, nu| RmseRow {
            method: name.clone(),
            target: target.clone(),
            k,
            rep,
            rmse,
            lambda,
            sigma2,
            nu,
        };
        let mut method_rows = Vec::with_capacity(cfg.orders.len());
        let mut estimates: Vec<Option<Vec<Option<f64>>>> = Vec::with_capacity(cfg.orders.len());
        match method {
            Method::Krr(_) | Method::KrrMaternTuned => match fit_krr(cfg, s, method, &x, &y, max_k) {
                Ok((model, tune)) => {
                    for (ki, &k) in cfg.orders.iter().enumerate() {
                        let est = model.predict_deriv(&MultiIndex::scalar(k), &s.grid_matrix);
                        let value = est.as_ref().ok().map(|e| stats::rmse(e, &s.truth_grid[ki])).transpose()?;
                        if let Err(e) = &est {
                            out.failures.push(failure(name, Some(k), rep, e));
                        }
                        method_rows.push(row(k, value, Some(tune.lambda), Some(tune.sigma2), tune.nu));
                        estimates.push(est.ok().map(|e| e.into_iter().map(Some).collect()));
                    }
                }
                Err(e) => {
                    out.failures.push(failure(name, None, rep, &e));
                    for &k in &cfg.orders {
                        method_rows.push(row(k, None, None, None, None));
                        estimates.push(None);
                    }
                }
            },
            Method::LocPoly { degree } => {
                // Bandwidth is cross-validated per polynomial degree, which
                // grows with the requested order.
                let mut choices: BTreeMap<usize, Result<BandwidthChoice<f64>>> = BTreeMap::new();
                let cv_seed = stream_seed(cfg.master_seed, &[rep as u64, 1]);
                for &k in &cfg.orders {
                    let p = (*degree).max(k);
                    let choice = choices
                        .entry(p)
                        .or_insert_with(|| cv_bandwidth(&x, &y, p, &s.bandwidth_grid, cv_seed))
                        .clone();
                    let h = match choice {
                        Ok(c) => c.bandwidth,
                        Err(e) => {
                            out.failures.push(failure(name, Some(k), rep, &e));
                            method_rows.push(row(k, None, None, None, None));
                            estimates.push(None);
                            continue;
                        }
                    };
                    let est = locpoly_deriv(&x, &y, &LocalPolyConfig::new(p, h)?, k, &s.grid)?;
                    let ki = method_rows.len();
                    let value = match est.iter().position(|v| v.is_none()) {
                        Some(i) => {
                            let e = Error::RankDeficientWindow { x: s.grid[i] };
                            out.failures.push(failure(name, Some(k), rep, &e));
                            None
                        }
                        None => {
                            let e: Vec<f64> = est.iter().map(|v| v.expect("checked")).collect();
                            Some(stats::rmse(&e, &s.truth_grid[ki])?)
                        }
                    };
                    method_rows.push(row(k, value, Some(h), None, None));
                    estimates.push(Some(est));
                }
            }
        }
        if rep == 0 {
            for (ki, &k) in cfg.orders.iter().enumerate() {
                for (t, &xg) in s.grid.iter().enumerate() {
                    out.curves.push(CurveRow {
                        method: name.clone(),
                        target: target.clone(),
                        k,
                        x: xg,
                        estimate: estimates[ki].as_ref().and_then(|e| e[t]),
                        truth: s.truth_grid[ki][t],
                    });
                }
            }
        }
        out.rows.push(method_rows);
    }
    Ok(out)
}

fn failure(method: &str, k: Option<usize>, rep: usize, e: &Error) -> MethodFailure {
    MethodFailure { method: method.into(), k, rep, message: e.to_string() }
}

/// One tuning per replication, shared by every derivative order.
fn fit_krr(
    cfg: &SimulationConfig,
    s: &Setup,
    method: &Method,
    x: &[f64],
    y: &[f64],
    max_k: usize,
) -> Result<(FittedKrr<f64>, TuneResult<f64>)> {
    let design = Matrix::column(x);
    let (kernel, tune) = match method {
        Method::Krr(kernel) => {
            let gram = kernel.gram(&design)?;
            let mut tune = match cfg.fixed_lambda {
                Some(l) => fixed_lambda_tune(&gram, y, l)?,
                None => tune_mmle_gram(&gram, y, &s.lambda_grid)?,
            };
            if let KernelSpec::Matern(m) = kernel {
                tune.nu = Some(m.nu());
            }
            let model = FittedKrr::fit_with_gram(kernel.clone(), design, &gram, y, tune.lambda, Some(tune.sigma2))?;
            return Ok((model, tune));
        }
        Method::KrrMaternTuned => {
            // Only smoothness values that offer every requested order compete.
            let top = MultiIndex::scalar(max_k);
            let zero = MultiIndex::scalar(0);
            let mut cands = Vec::new();
            for &nu in &s.nu_candidates {
                if KernelSpec::matern(nu)?.offers(&top, &zero) {
                    cands.push(nu);
                }
            }
            if cands.is_empty() {
                return Err(Error::InvalidConfig(format!("no Matérn candidate offers derivative order {max_k}")));
            }
            let tune = match cfg.fixed_lambda {
                Some(l) => fixed_lambda_nu(&design, y, &cands, l)?,
                None => tune_nu(&design, y, &cands, &s.lambda_grid)?,
            };
            let nu = tune.nu.expect("nu tuned");
            (KernelSpec::matern(nu)?, tune)
        }
        Method::LocPoly { .. } => unreachable!("not a KRR method"),
    };
    let model = FittedKrr::fit(kernel, design, y, tune.lambda, Some(tune.sigma2))?;
    Ok((model, tune))
}

fn fixed_lambda_tune(gram: &Matrix<f64>, y: &[f64], lambda: f64) -> Result<TuneResult<f64>> {
    let sigma2 = profile_sigma2(gram, y, lambda)?;
    let objective_value = lml_from_gram(gram, y, lambda, sigma2)?;
    Ok(TuneResult { lambda, sigma2, nu: None, objective_value, trace: vec![(lambda, objective_value)] })
}

fn fixed_lambda_nu(design: &Matrix<f64>, y: &[f64], cands: &[f64], lambda: f64) -> Result<TuneResult<f64>> {
    let mut best: Option<(f64, f64, f64)> = None;
    let mut trace = Vec::with_capacity(cands.len());
    for &nu in cands {
        let gram = KernelSpec::matern(nu)?.gram(design)?;
        let mse = loo_mse_gram(&gram, y, lambda)?;
        trace.push((nu, mse));
        let better = match best {
            None => true,
            Some((b_nu, b_mse, _)) => mse < b_mse || (mse == b_mse && nu < b_nu),
        };
        if better {
            best = Some((nu, mse, profile_sigma2(&gram, y, lambda)?));
        }
    }
    let (nu, mse, sigma2) = best.expect("non-empty candidates");
    Ok(TuneResult { lambda, sigma2, nu: Some(nu), objective_value: mse, trace })
}
