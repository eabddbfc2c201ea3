//! Hyperparameter selection: marginal likelihood for `(lambda, sigma^2)` and
//! leave-one-out cross validation for the Matérn smoothness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{chol_shifted, dot, CholFactor, Matrix};
use crate::scalar::Scalar;

/// Golden-section steps on `log lambda`. A fixed count keeps the sequence of
/// comparisons, and hence the result, reproducible under row permutations.
const GOLDEN_STEPS: usize = 18;

/// Leverages at or above `1 - LEVERAGE_GUARD` make the LOO residual undefined.
const LEVERAGE_GUARD: f64 = 1e-12;

pub const DEFAULT_NU_CANDIDATES: [f64; 5] = [0.5, 1.5, 2.5, 3.5, 4.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TuneResult<T> {
    pub lambda: T,
    pub sigma2: T,
    pub nu: Option<T>,
    /// Maximized log marginal likelihood, or the minimized LOO MSE when `nu`
    /// was selected.
    pub objective_value: T,
    /// `(candidate, objective)` pairs in evaluation order.
    pub trace: Vec<(T, T)>,
}

/// `count` logarithmically spaced values on `[lo, hi]`.
pub fn log_grid<T: Scalar>(lo: T, hi: T, count: usize) -> Result<Vec<T>> {
    if count == 0 {
        return Err(Error::EmptyGrid("lambda"));
    }
    if !(lo > T::zero()) || !(hi >= lo) {
        return Err(Error::InvalidParameter(format!("log grid needs 0 < lo <= hi, got {lo}:{hi}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::from_usize_lossy(count - 1);
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { (a + step * T::from_usize_lossy(i)).exp() })
        .collect())
}

/// 25 log-spaced points on `[1e-8, 1]`.
pub fn default_lambda_grid<T: Scalar>() -> Vec<T> {
    log_grid(T::lit(1e-8), T::one(), 25).expect("static grid")
}

fn variance_floor<T: Scalar>(y: &[T]) -> T {
    let n = T::from_usize_lossy(y.len().max(1));
    let mean = y.iter().copied().sum::<T>() / n;
    let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    T::lit(1e-12) * var + T::min_positive_value().max(T::lit(1e-300))
}

/// Pieces of the marginal likelihood that depend on `lambda` only.
struct LambdaEval<T> {
    quad: T,
    logdet: T,
}

fn lambda_eval<T: Scalar>(gram: &Matrix<T>, y: &[T], lambda: T) -> Result<LambdaEval<T>> {
    let n = gram.rows();
    let chol = chol_shifted(gram, T::from_usize_lossy(n) * lambda)?;
    let alpha = chol.solve_vec(y)?;
    Ok(LambdaEval { quad: dot(y, &alpha), logdet: chol.logdet() })
}

fn lml_parts<T: Scalar>(n: usize, lambda: T, sigma2: T, e: &LambdaEval<T>) -> T {
    let nf = T::from_usize_lossy(n);
    let nl = nf * lambda;
    let half = T::lit(0.5);
    let two_pi = T::lit(2.0) * T::PI();
    -half * (nl / sigma2) * e.quad - half * (nf * (sigma2 / nl).ln() + e.logdet) - half * nf * two_pi.ln()
}

fn check_inputs<T: Scalar>(gram: &Matrix<T>, y: &[T]) -> Result<()> {
    if gram.rows() != y.len() || gram.cols() != y.len() {
        return Err(Error::DimensionMismatch { context: "responses", expected: gram.rows(), found: y.len() });
    }
    if y.is_empty() {
        return Err(Error::DimensionMismatch { context: "responses", expected: 1, found: 0 });
    }
    Ok(())
}

fn check_positive<T: Scalar>(v: T, name: &str) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `log N(y; 0, sigma^2 (n lambda)^{-1} K + sigma^2 I)` using one Cholesky
/// factor of `K + n lambda I`.
pub fn log_marginal_likelihood<T: Scalar>(
    kernel: &KernelSpec<T>,
    design: &Matrix<T>,
    y: &[T],
    lambda: T,
    sigma2: T,
) -> Result<T> {
    let gram = kernel.gram(design)?;
    lml_from_gram(&gram, y, lambda, sigma2)
}

pub fn lml_from_gram<T: Scalar>(gram: &Matrix<T>, y: &[T], lambda: T, sigma2: T) -> Result<T> {
    check_inputs(gram, y)?;
    check_positive(lambda, "lambda")?;
    check_positive(sigma2, "sigma2")?;
    let e = lambda_eval(gram, y, lambda)?;
    Ok(lml_parts(y.len(), lambda, sigma2, &e))
}

/// Closed-form maximizer of the likelihood in `sigma^2` at fixed `lambda`:
/// `(1/n) y^T (K/(n lambda) + I)^{-1} y = lambda y^T (K + n lambda I)^{-1} y`,
/// floored to stay positive.
pub fn profile_sigma2<T: Scalar>(gram: &Matrix<T>, y: &[T], lambda: T) -> Result<T> {
    check_inputs(gram, y)?;
    check_positive(lambda, "lambda")?;
    let e = lambda_eval(gram, y, lambda)?;
    Ok(profiled_sigma2(y, lambda, &e))
}

fn profiled_sigma2<T: Scalar>(y: &[T], lambda: T, e: &LambdaEval<T>) -> T {
    (lambda * e.quad).max(variance_floor(y))
}

/// Profiled objective at one `lambda`: `(lml, sigma2_hat)`.
fn profiled<T: Scalar>(gram: &Matrix<T>, y: &[T], lambda: T) -> Result<(T, T)> {
    let e = lambda_eval(gram, y, lambda)?;
    let s2 = profiled_sigma2(y, lambda, &e);
    Ok((lml_parts(y.len(), lambda, s2, &e), s2))
}

/// Marginal-likelihood tuning on a precomputed Gram matrix.
pub fn tune_mmle_gram<T: Scalar>(gram: &Matrix<T>, y: &[T], lambda_grid: &[T]) -> Result<TuneResult<T>> {
    check_inputs(gram, y)?;
    let mut grid: Vec<T> = lambda_grid.to_vec();
    if grid.is_empty() {
        return Err(Error::EmptyGrid("lambda"));
    }
    for &l in &grid {
        check_positive(l, "lambda grid value")?;
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();

    let mut trace = Vec::with_capacity(grid.len() + GOLDEN_STEPS + 2);
    let mut evals = Vec::with_capacity(grid.len());
    for &l in &grid {
        let (v, s2) = profiled(gram, y, l)?;
        trace.push((l, v));
        evals.push((l, v, s2));
    }
    let mut best_i = 0;
    for (i, e) in evals.iter().enumerate() {
        if e.1 > evals[best_i].1 {
            best_i = i;
        }
    }
    let (mut best_l, mut best_v, mut best_s2) = evals[best_i];

    if grid.len() > 1 {
        let lo = grid[best_i.saturating_sub(1)].ln();
        let hi = grid[(best_i + 1).min(grid.len() - 1)].ln();
        let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = profiled(gram, y, c.exp())?;
        let mut fd = profiled(gram, y, d.exp())?;
        for _ in 0..GOLDEN_STEPS {
            if fc.0 >= fd.0 {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = profiled(gram, y, c.exp())?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = profiled(gram, y, d.exp())?;
            }
        }
        let (l, f) = if fc.0 >= fd.0 { (c.exp(), fc) } else { (d.exp(), fd) };
        trace.push((l, f.0));
        if f.0 > best_v {
            best_l = l;
            best_v = f.0;
            best_s2 = f.1;
        }
    }
    Ok(TuneResult { lambda: best_l, sigma2: best_s2, nu: None, objective_value: best_v, trace })
}

/// Maximizes the profiled marginal likelihood over `lambda_grid`, then
/// refines by golden section on `log lambda` between the grid neighbours of
/// the best grid point.
pub fn tune_mmle<T: Scalar>(
    kernel: &KernelSpec<T>,
    design: &Matrix<T>,
    y: &[T],
    lambda_grid: &[T],
) -> Result<TuneResult<T>> {
    let gram = kernel.gram(design)?;
    tune_mmle_gram(&gram, y, lambda_grid)
}

/// Closed-form leave-one-out residuals `e_i = (y_i - f_hat_i) / (1 - H_ii)`
/// with `H = K (K + n lambda I)^{-1}`.
pub fn loo_residuals<T: Scalar>(
    kernel: &KernelSpec<T>,
    design: &Matrix<T>,
    y: &[T],
    lambda: T,
) -> Result<Vec<T>> {
    let gram = kernel.gram(design)?;
    loo_residuals_gram(&gram, y, lambda)
}

pub fn loo_residuals_gram<T: Scalar>(gram: &Matrix<T>, y: &[T], lambda: T) -> Result<Vec<T>> {
    check_inputs(gram, y)?;
    check_positive(lambda, "lambda")?;
    let n = y.len();
    let nl = T::from_usize_lossy(n) * lambda;
    let chol: CholFactor<T> = chol_shifted(gram, nl)?;
    let alpha = chol.solve_vec(y)?;
    let inv_diag = chol.inverse_diagonal();
    // y - K alpha = n lambda alpha and 1 - H_ii = n lambda [A^{-1}]_ii.
    let guard = T::lit(LEVERAGE_GUARD);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let one_minus_h = nl * inv_diag[i];
        if one_minus_h <= guard {
            return Err(Error::DegenerateLeverage { index: i, leverage: (T::one() - one_minus_h).as_f64() });
        }
        out.push(alpha[i] / inv_diag[i]);
    }
    Ok(out)
}

pub fn loo_mse_gram<T: Scalar>(gram: &Matrix<T>, y: &[T], lambda: T) -> Result<T> {
    let e = loo_residuals_gram(gram, y, lambda)?;
    Ok(e.iter().map(|&v| v * v).sum::<T>() / T::from_usize_lossy(e.len()))
}

/// Per-candidate outcome of [`tune_nu`].
#[derive(Debug, Clone, PartialEq)]
pub struct NuCandidate<T> {
    pub nu: T,
    pub mmle: TuneResult<T>,
    pub loo_mse: T,
}

/// Tunes `(lambda, sigma^2)` by marginal likelihood for every Matérn `nu`,
/// scores each by LOO MSE of the regression function, and keeps the best
/// (ties go to the smaller `nu`).
pub fn tune_nu<T: Scalar>(
    design: &Matrix<T>,
    y: &[T],
    nu_candidates: &[T],
    lambda_grid: &[T],
) -> Result<TuneResult<T>> {
    tune_nu_detailed(design, y, nu_candidates, lambda_grid).map(|(r, _)| r)
}

pub fn tune_nu_detailed<T: Scalar>(
    design: &Matrix<T>,
    y: &[T],
    nu_candidates: &[T],
    lambda_grid: &[T],
) -> Result<(TuneResult<T>, Vec<NuCandidate<T>>)> {
    if nu_candidates.is_empty() {
        return Err(Error::EmptyGrid("nu"));
    }
    let scored: Vec<NuCandidate<T>> = nu_candidates
        .par_iter()
        .map(|&nu| {
            let kernel = KernelSpec::matern(nu)?;
            let gram = kernel.gram(design)?;
            let mmle = tune_mmle_gram(&gram, y, lambda_grid)?;
            let loo_mse = loo_mse_gram(&gram, y, mmle.lambda)?;
            Ok(NuCandidate { nu, mmle, loo_mse })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, c) in scored.iter().enumerate() {
        let b = &scored[best];
        if c.loo_mse < b.loo_mse || (c.loo_mse == b.loo_mse && c.nu < b.nu) {
            best = i;
        }
    }
    let b = &scored[best];
    let result = TuneResult {
        lambda: b.mmle.lambda,
        sigma2: b.mmle.sigma2,
        nu: Some(b.nu),
        objective_value: b.loo_mse,
        trace: scored.iter().map(|c| (c.nu, c.loo_mse)).collect(),
    };
    Ok((result, scored))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_single_point() {
        let g = Matrix::<f64>::zeros(1, 1);
        let s2 = 0.7;
        let v = lml_from_gram(&g, &[0.0], 0.3, s2).unwrap();
        let want = -0.5 * (2.0 * std::f64::consts::PI * s2).ln();
        assert!((v - want).abs() < 1e-14);
    }

    #[test]
    fn two_point_identity_kernel() {
        // C = K + I = 2 I, so the value is -1/4 - log 4 / 2 - log(2 pi).
        let g = Matrix::<f64>::identity(2);
        let v = lml_from_gram(&g, &[1.0, 0.0], 0.5, 1.0).unwrap();
        let want = -0.25 - 0.5 * 4.0_f64.ln() - (2.0 * std::f64::consts::PI).ln();
        assert!((v - want).abs() < 1e-14);
    }

    #[test]
    fn grid_helpers() {
        let g = log_grid(1e-4_f64, 1.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[1] - 1e-3).abs() < 1e-15);
        assert_eq!(g[4], 1.0);
        assert_eq!(default_lambda_grid::<f64>().len(), 25);
        assert!(log_grid(0.0_f64, 1.0, 3).is_err());
        assert!(log_grid(1.0_f64, 2.0, 0).is_err());
    }

    #[test]
    fn empty_inputs_fail() {
        let g = Matrix::<f64>::identity(2);
        assert_eq!(tune_mmle_gram(&g, &[1.0, 2.0], &[]), Err(Error::EmptyGrid("lambda")));
        let x = Matrix::column(&[0.1, 0.2]);
        assert_eq!(tune_nu(&x, &[1.0, 2.0], &[], &[0.1]), Err(Error::EmptyGrid("nu")));
    }

    #[test]
    fn zero_response_hits_floor() {
        let g = Matrix::<f64>::identity(3);
        let r = tune_mmle_gram(&g, &[0.0; 3], &[0.01, 0.1]).unwrap();
        assert!(r.sigma2 > 0.0);
        assert!(r.objective_value.is_finite());
    }
}
