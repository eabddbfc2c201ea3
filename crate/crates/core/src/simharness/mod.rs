//! Monte Carlo protocol for derivative estimation and the convergence-rate
//! experiments. Everything here works in `f64`.

mod montecarlo;
mod rate;

pub use montecarlo::{run_montecarlo, CurveRow, MethodFailure, RmseReport, RmseRow, SummaryRow};
pub use rate::{
    run_adaptivity_check, run_adaptivity_check_with, run_rate_experiment, run_rate_experiments, AdaptivityOptions,
    AdaptivityReport, RateFit, RateOptions,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::spectral::HolderFunction;

/// Terms and normalisation grid of the spectral Hölder target.
pub const HOLDER_TARGET_TERMS: usize = 2000;
pub const HOLDER_TARGET_GRID: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    F01,
    F02,
    SpectralHolder { alpha: f64 },
}

impl Target {
    pub fn name(&self) -> String {
        match self {
            Target::F01 => "f01".into(),
            Target::F02 => "f02".into(),
            Target::SpectralHolder { alpha } => format!("spectral_holder:{alpha}"),
        }
    }

    pub fn max_order(&self) -> usize {
        match self {
            Target::F01 | Target::F02 => 3,
            Target::SpectralHolder { alpha } => alpha.floor().max(0.0) as usize,
        }
    }
}

/// A target ready for evaluation (the Hölder series is built once).
#[derive(Debug, Clone)]
pub enum Truth {
    F01,
    F02,
    Holder(HolderFunction<f64>),
}

impl Truth {
    pub fn new(target: Target) -> Result<Self> {
        Ok(match target {
            Target::F01 => Truth::F01,
            Target::F02 => Truth::F02,
            Target::SpectralHolder { alpha } => {
                Truth::Holder(HolderFunction::standard(alpha, HOLDER_TARGET_TERMS, HOLDER_TARGET_GRID)?)
            }
        })
    }

    pub fn eval(&self, k: usize, x: f64) -> Result<f64> {
        match self {
            Truth::F01 => f01(k, x),
            Truth::F02 => f02(k, x),
            Truth::Holder(f) => {
                if k > f.max_order() {
                    return Err(unsupported(k, f.max_order()));
                }
                Ok(f.eval_deriv(k, x))
            }
        }
    }
}

fn unsupported(k: usize, max: usize) -> Error {
    Error::InvalidParameter(format!("target derivative of order {k} unavailable (max {max})"))
}

/// `f01(x) = exp(-4 (1 - 2x)^2) (1 - 2x)` and its first three derivatives.
pub fn f01(k: usize, x: f64) -> Result<f64> {
    let u = 1.0 - 2.0 * x;
    let e = (-4.0 * u * u).exp();
    let u2 = u * u;
    // Derivatives of g(u) = u e^{-4u^2}; du/dx = -2.
    let g = match k {
        0 => u * e,
        1 => (1.0 - 8.0 * u2) * e,
        2 => (-24.0 * u + 64.0 * u2 * u) * e,
        3 => (-24.0 + 384.0 * u2 - 512.0 * u2 * u2) * e,
        _ => return Err(unsupported(k, 3)),
    };
    Ok((-2.0f64).powi(k as i32) * g)
}

/// `f02(x) = sin(8x) + cos(8x) + log(4/3 + x)` and its first three derivatives.
pub fn f02(k: usize, x: f64) -> Result<f64> {
    let (s, c) = (8.0 * x).sin_cos();
    let a = 4.0 / 3.0 + x;
    Ok(match k {
        0 => s + c + a.ln(),
        1 => 8.0 * c - 8.0 * s + 1.0 / a,
        2 => -64.0 * s - 64.0 * c - 1.0 / (a * a),
        3 => -512.0 * c + 512.0 * s + 2.0 / (a * a * a),
        _ => return Err(unsupported(k, 3)),
    })
}

pub fn truth(target: Target, k: usize, x: f64) -> Result<f64> {
    Truth::new(target)?.eval(k, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    RandomUniform,
    FixedEquispaced,
}

impl Design {
    pub fn name(&self) -> &'static str {
        match self {
            Design::RandomUniform => "random_uniform",
            Design::FixedEquispaced => "fixed_equispaced",
        }
    }
}

/// Estimation method of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// KRR with a fixed kernel; `lambda` and `sigma^2` by marginal likelihood.
    Krr(KernelSpec<f64>),
    /// KRR with Matérn smoothness chosen by leave-one-out.
    KrrMaternTuned,
    LocPoly { degree: usize },
}

pub const DEFAULT_LOCPOLY_DEGREE: usize = 2;

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "krr:matern" {
            return Ok(Method::KrrMaternTuned);
        }
        if let Some(spec) = s.strip_prefix("krr:") {
            return Ok(Method::Krr(spec.parse()?));
        }
        if s == "locpoly" {
            return Ok(Method::LocPoly { degree: DEFAULT_LOCPOLY_DEGREE });
        }
        if let Some(rest) = s.strip_prefix("locpoly:") {
            let degree = rest
                .strip_prefix("degree=")
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Parse(format!("expected locpoly:degree=<p>, got `{s}`")))?;
            return Ok(Method::LocPoly { degree });
        }
        Err(Error::Parse(format!("unknown method `{s}`")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Krr(k) => write!(f, "krr:{k}"),
            Method::KrrMaternTuned => write!(f, "krr:matern"),
            Method::LocPoly { degree } => write!(f, "locpoly:degree={degree}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        crate::tuning::log_grid(self.lo, self.hi, self.count)
    }
}

fn default_eval_grid() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub target: Target,
    pub design: Design,
    pub n: usize,
    pub sigma: f64,
    pub methods: Vec<String>,
    pub orders: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_eval_grid")]
    pub eval_grid: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Marginal-likelihood search grid; 25 points on `[1e-8, 1]` when absent.
    #[serde(default)]
    pub lambda_grid: Option<GridSpec>,
    /// Skips the `lambda` search for every KRR method.
    #[serde(default)]
    pub fixed_lambda: Option<f64>,
    #[serde(default)]
    pub nu_candidates: Option<Vec<f64>>,
    /// Local polynomial bandwidth grid; 20 points on `[0.01, 0.5]` when absent.
    #[serde(default)]
    pub bandwidth_grid: Option<GridSpec>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n < 10 {
            return bad(format!("n must be at least 10, got {}", self.n));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be finite and non-negative, got {}", self.sigma));
        }
        if self.eval_grid < 2 {
            return bad("eval_grid must be at least 2".into());
        }
        if self.methods.is_empty() || self.orders.is_empty() {
            return bad("methods and orders must be non-empty".into());
        }
        if let Target::SpectralHolder { alpha } = self.target {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return bad(format!("spectral_holder alpha must be positive, got {alpha}"));
            }
        }
        let max = self.target.max_order();
        if let Some(&k) = self.orders.iter().find(|&&k| k > max) {
            return bad(format!("order {k} exceeds what target {} supplies ({max})", self.target.name()));
        }
        if let Some(l) = self.fixed_lambda {
            if !(l > 0.0) || !l.is_finite() {
                return bad(format!("fixed_lambda must be positive, got {l}"));
            }
        }
        if let Some(c) = &self.nu_candidates {
            if c.is_empty() || c.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return bad("nu_candidates must be non-empty and positive".into());
            }
        }
        for g in [&self.lambda_grid, &self.bandwidth_grid].into_iter().flatten() {
            g.values().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        self.parsed_methods()?;
        Ok(())
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of an independent stream identified by `parts`.
pub fn stream_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub fn stream_rng(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, parts))
}

/// Design points: `Unif[0, 1]` draws or `X_i = i / n`.
pub fn design_points(design: Design, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    match design {
        Design::RandomUniform => (0..n).map(|_| rng.random::<f64>()).collect(),
        Design::FixedEquispaced => (1..=n).map(|i| i as f64 / n as f64).collect(),
    }
}

/// Data of replication `rep`: `y_i = f_0(X_i) + sigma eps_i`.
pub fn generate(cfg: &SimulationConfig, rep: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let truth = Truth::new(cfg.target)?;
    generate_with(cfg, &truth, rep)
}

pub(crate) fn generate_with(cfg: &SimulationConfig, truth: &Truth, rep: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream_rng(cfg.master_seed, &[rep as u64]);
    let x = design_points(cfg.design, cfg.n, &mut rng);
    let mut y = Vec::with_capacity(cfg.n);
    for &xi in &x {
        let eps: f64 = rng.sample(StandardNormal);
        y.push(truth.eval(0, xi)? + cfg.sigma * eps);
    }
    Ok((x, y))
}

pub fn rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    crate::stats::rmse(estimate, truth)
}
