use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use krr_deriv::simharness::{
    run_adaptivity_check_with, run_rate_experiments, stream_seed, AdaptivityOptions, GridSpec, RateOptions,
    HOLDER_TARGET_GRID,
};
use krr_deriv::spectral::{
    bias_scaling, effective_dimension_scaling, equivalent_kernel_bound, rkhs_bound, rkhs_norm_inequality_check,
    rkhs_norm_inequality_check_general, HolderFunction, ScalingFit, SpectralKernel,
};
use krr_deriv::{KernelSpec, MultiIndex};

use crate::args::TheoryArgs;
use crate::error::{CliError, CliResult};
use crate::files::{num, Artifacts, Table};
use crate::Outcome;

fn d_terms_large() -> usize {
    100_000
}
fn d_terms() -> usize {
    2000
}
fn d_sigma() -> f64 {
    0.1
}
fn d_rate_terms() -> usize {
    256
}
fn d_adapt_terms() -> usize {
    128
}
fn d_grid() -> usize {
    400
}
fn d_delta() -> f64 {
    0.05
}
fn d_trials() -> usize {
    500
}
fn d_s() -> f64 {
    1.0
}
fn d_centers() -> usize {
    8
}
fn d_sup_grid() -> usize {
    401
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub effective_dimension: Option<EffectiveDimensionSection>,
    #[serde(default)]
    pub bias: Option<BiasSection>,
    #[serde(default)]
    pub rate: Option<RateSection>,
    #[serde(default)]
    pub adaptivity: Option<AdaptivitySection>,
    #[serde(default)]
    pub bounds: Vec<BoundSection>,
    #[serde(default)]
    pub norm_inequality: Option<NormSection>,
}

/// `kappa_tilde_m^2` along a `lambda` path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveDimensionSection {
    pub alpha: f64,
    pub orders: Vec<usize>,
    pub lambda_grid: GridSpec,
    #[serde(default = "d_terms_large")]
    pub terms: usize,
}

/// `sup |f_lambda^{(m)} - f_0^{(m)}|` along a `lambda` path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSection {
    pub alpha: f64,
    pub orders: Vec<usize>,
    pub lambda_grid: GridSpec,
    #[serde(default = "d_terms")]
    pub kernel_terms: usize,
    #[serde(default = "d_terms")]
    pub target_terms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub alpha: f64,
    pub orders: Vec<usize>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    #[serde(default = "d_sigma")]
    pub sigma: f64,
    #[serde(default = "d_rate_terms")]
    pub kernel_terms: usize,
    #[serde(default = "d_grid")]
    pub grid: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptivitySection {
    pub alpha: f64,
    pub n: usize,
    pub replications: usize,
    #[serde(default = "d_sigma")]
    pub sigma: f64,
    #[serde(default = "d_adapt_terms")]
    pub kernel_terms: usize,
    #[serde(default = "d_grid")]
    pub grid: usize,
    /// Quarter-decade grid on `[1e-9, 1]` when absent.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundChoice {
    EquivalentKernel,
    Rkhs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub kind: BoundChoice,
    pub alpha: f64,
    pub n: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub order: usize,
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[serde(default = "d_terms")]
    pub kernel_terms: usize,
    #[serde(default = "d_terms")]
    pub target_terms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    #[serde(default)]
    pub spectral: Option<SpectralNormCheck>,
    #[serde(default)]
    pub kernels: Vec<KernelNormCheck>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralNormCheck {
    pub alpha: f64,
    pub lambda: f64,
    pub orders: Vec<usize>,
    #[serde(default = "d_trials")]
    pub trials: usize,
    /// Coefficients are drawn as `g_i mu_i^s`.
    #[serde(default = "d_s")]
    pub s: f64,
    #[serde(default = "d_terms")]
    pub kernel_terms: usize,
    #[serde(default = "d_terms")]
    pub draw_terms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelNormCheck {
    pub kernel: String,
    /// Multi-index such as `1` or `1:0`.
    pub order: String,
    #[serde(default = "d_trials")]
    pub trials: usize,
    #[serde(default = "d_centers")]
    pub centers: usize,
    #[serde(default = "d_sup_grid")]
    pub grid: usize,
}

pub fn theory(args: &TheoryArgs, seed: Option<u64>, art: &mut Artifacts) -> CliResult<Outcome> {
    let text = art.read_string(&args.config)?;
    let mut cfg: TheoryConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let any = cfg.effective_dimension.is_some()
        || cfg.bias.is_some()
        || cfg.rate.is_some()
        || cfg.adaptivity.is_some()
        || !cfg.bounds.is_empty()
        || cfg.norm_inequality.is_some();
    if !any {
        return Err(CliError::Input(format!("{}: no sections to run", args.config.display())));
    }

    let mut slopes: Vec<(&str, f64, ScalingFit<f64>)> = Vec::new();
    if let Some(s) = &cfg.effective_dimension {
        let kernel = SpectralKernel::new(s.alpha, s.terms)?;
        let lambdas = s.lambda_grid.values()?;
        let mut curve = Table::new(["order", "lambda", "kappa_tilde2"])?;
        for &m in &s.orders {
            let fit = effective_dimension_scaling(&kernel, &lambdas, m)?;
            for (l, v) in fit.lambdas.iter().zip(&fit.values) {
                curve.row([m.to_string(), num(*l), num(*v)])?;
            }
            slopes.push(("effective_dimension", s.alpha, fit));
        }
        art.write_table(&PathBuf::from("effective_dimension_curve.csv"), curve)?;
    }
    if let Some(s) = &cfg.bias {
        let kernel = SpectralKernel::new(s.alpha, s.kernel_terms)?;
        let f0 = HolderFunction::standard(s.alpha, s.target_terms, HOLDER_TARGET_GRID)?;
        let lambdas = s.lambda_grid.values()?;
        let mut curve = Table::new(["order", "lambda", "gap_sup"])?;
        for &m in &s.orders {
            let fit = bias_scaling(&kernel, &f0, &lambdas, m)?;
            for (l, v) in fit.lambdas.iter().zip(&fit.values) {
                curve.row([m.to_string(), num(*l), num(*v)])?;
            }
            slopes.push(("bias", s.alpha, fit));
        }
        art.write_table(&PathBuf::from("bias_curve.csv"), curve)?;
    }
    if !slopes.is_empty() {
        let mut t =
            Table::new(["check", "alpha", "order", "slope", "slope_se", "theoretical", "abs_error", "rel_error"])?;
        for (check, alpha, f) in &slopes {
            let err = f.slope - f.theoretical_slope;
            t.row([
                check.to_string(),
                num(*alpha),
                f.order.to_string(),
                num(f.slope),
                num(f.slope_se),
                num(f.theoretical_slope),
                num(err.abs()),
                num((err / f.theoretical_slope).abs()),
            ])?;
        }
        art.write_table(&PathBuf::from("scaling_slopes.csv"), t)?;
    }

    if let Some(s) = &cfg.rate {
        let opts = RateOptions { sigma: s.sigma, kernel_terms: s.kernel_terms, grid: s.grid };
        let fits = run_rate_experiments(&s.orders, s.alpha, &s.n_values, s.replications, cfg.seed, &opts)?;
        let mut points = Table::new(["k", "n", "lambda", "mean_log_error"])?;
        let mut table = Table::new(["k", "alpha", "slope", "slope_se", "theoretical"])?;
        for f in &fits {
            for ((n, l), e) in f.n_values.iter().zip(&f.lambdas).zip(&f.mean_log_error) {
                points.row([f.k.to_string(), n.to_string(), num(*l), num(*e)])?;
            }
            table.row([f.k.to_string(), num(f.alpha), num(f.slope), num(f.slope_se), num(f.theoretical_slope)])?;
        }
        art.write_table(&PathBuf::from("rate_points.csv"), points)?;
        art.write_table(&PathBuf::from("rate_slopes.csv"), table)?;
    }

    if let Some(s) = &cfg.adaptivity {
        let mut opts = AdaptivityOptions { sigma: s.sigma, kernel_terms: s.kernel_terms, grid: s.grid, ..Default::default() };
        if let Some(g) = &s.lambda_grid {
            opts.lambda_grid = g.clone();
        }
        let r = run_adaptivity_check_with(s.alpha, s.n, s.replications, cfg.seed, &opts)?;
        let mut curves = Table::new(["k", "lambda", "mean_rmse"])?;
        let mut summary = Table::new(["k", "argmin_index", "argmin_lambda", "spread_cells"])?;
        for (o, &k) in r.orders.iter().enumerate() {
            for (l, v) in r.lambda_grid.iter().zip(&r.mean_rmse[o]) {
                curves.row([k.to_string(), num(*l), num(*v)])?;
            }
            summary.row([
                k.to_string(),
                r.argmin_index[o].to_string(),
                num(r.argmin_lambda[o]),
                r.spread_cells.to_string(),
            ])?;
        }
        art.write_table(&PathBuf::from("adaptivity_curves.csv"), curves)?;
        art.write_table(&PathBuf::from("adaptivity_summary.csv"), summary)?;
    }

    if !cfg.bounds.is_empty() {
        let mut entries: Vec<Value> = Vec::new();
        for b in &cfg.bounds {
            let kernel = SpectralKernel::new(b.alpha, b.kernel_terms)?;
            let f0 = HolderFunction::standard(b.alpha, b.target_terms, HOLDER_TARGET_GRID)?;
            let report = match b.kind {
                BoundChoice::EquivalentKernel => equivalent_kernel_bound(&kernel, &f0, b.lambda, b.n, b.sigma, b.order),
                BoundChoice::Rkhs => rkhs_bound(&kernel, &f0, b.lambda, b.n, b.sigma, b.order, b.delta),
            };
            entries.push(match report {
                Ok(r) => json!({ "input": b, "report": r }),
                Err(krr_deriv::Error::NonContractive { c }) => {
                    json!({ "input": b, "non_contractive": { "c_n_kappa": c } })
                }
                Err(e) => return Err(e.into()),
            });
        }
        art.write_json_pretty(&PathBuf::from("bounds.json"), &entries)?;
    }

    if let Some(s) = &cfg.norm_inequality {
        let mut t = Table::new(["check", "kernel", "order", "trials", "max_ratio"])?;
        if let Some(sp) = &s.spectral {
            let kernel = SpectralKernel::new(sp.alpha, sp.kernel_terms)?;
            for (i, &m) in sp.orders.iter().enumerate() {
                let seed = stream_seed(cfg.seed, &[0x6e6f726d, i as u64]);
                let worst = rkhs_norm_inequality_check(&kernel, sp.lambda, m, sp.trials, sp.s, sp.draw_terms, seed)?;
                t.row([
                    "equivalent_kernel".to_string(),
                    KernelSpec::Spectral(kernel.clone()).to_string(),
                    m.to_string(),
                    sp.trials.to_string(),
                    num(worst),
                ])?;
            }
        }
        for (i, c) in s.kernels.iter().enumerate() {
            let kernel: KernelSpec<f64> = c.kernel.parse()?;
            let beta: MultiIndex = c.order.parse()?;
            let seed = stream_seed(cfg.seed, &[0x6b65726e, i as u64]);
            let worst = rkhs_norm_inequality_check_general(&kernel, &beta, c.trials, c.centers, c.grid, seed)?;
            t.row(["rkhs".to_string(), kernel.to_string(), beta.to_string(), c.trials.to_string(), num(worst)])?;
        }
        art.write_table(&PathBuf::from("norm_inequality.csv"), t)?;
    }

    Ok(Outcome::new(serde_json::to_value(&cfg).expect("config serializes")))
}
