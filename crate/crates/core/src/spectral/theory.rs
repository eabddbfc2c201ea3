use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, MultiIndex};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;
use crate::spectral::basis;
use crate::spectral::holder::{f_lambda_gap, series_sup, unit_grid, HolderFunction};
use crate::spectral::SpectralKernel;

/// Sup norms are taken over this many equispaced points of `[0, 1]`.
pub const SUP_GRID: usize = 2001;

/// Printed with every assembled bound.
pub const UNIVERSAL_CONSTANT_CAVEAT: &str =
    "unspecified universal constants are set to 1; the bound is a calibration, not a certificate";

/// `nu_i = mu_i / (lambda + mu_i)`.
pub fn equivalent_eigenvalues<T: Scalar>(k: &SpectralKernel<T>, lambda: T) -> Vec<T> {
    k.eigenvalues().iter().map(|&m| m / (lambda + m)).collect()
}

/// Series truncation `max(1e5, 50 lambda^{-1/(2 alpha)})`.
pub fn default_truncation<T: Scalar>(lambda: T, alpha: T) -> usize {
    let scaled = T::lit(50.0) * lambda.powf(-T::one() / (T::lit(2.0) * alpha));
    let n = scaled.ceil().to_usize().unwrap_or(usize::MAX);
    n.max(100_000)
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// `sum_i nu_i sup_x (psi_i^{(m)})^2`, an upper bound on the effective
/// dimension (about twice the true value for the trigonometric system).
pub fn effective_dimension_envelope<T: Scalar>(k: &SpectralKernel<T>, lambda: T, m: usize) -> Result<T> {
    check_lambda(lambda)?;
    k.check_order(m)?;
    let mut acc = T::zero();
    for (idx, &mu) in k.eigenvalues().iter().enumerate() {
        let s = basis::basis_sup::<T>(idx + 1, m);
        acc += mu / (lambda + mu) * s * s;
    }
    Ok(acc)
}

/// Writes `S(x) = sum_i w_i (psi_i^{(m)}(x))^2` as `A + sum_j a_j cos(4 pi j x)`.
///
/// Each pair `(2j, 2j+1)` contributes
/// `(2 pi j)^{2m} [(w_{2j} + w_{2j+1}) +- (w_{2j} - w_{2j+1}) cos(4 pi j x)]`
/// with `+` for even `m` (cosine-type derivative) and `-` for odd `m`.
fn diagonal_cosine_series<T: Scalar>(weights: &[T], m: usize) -> (T, Vec<T>) {
    let mut constant = if m == 0 { weights[0] } else { T::zero() };
    let mut amps = Vec::with_capacity(weights.len() / 2);
    let sign = if m % 2 == 0 { T::one() } else { -T::one() };
    let mut j = 1;
    while 2 * j <= weights.len() {
        let w_c = weights[2 * j - 1];
        let w_s = if 2 * j < weights.len() { weights[2 * j] } else { T::zero() };
        let scale = (T::lit(2.0) * T::PI() * T::from_usize_lossy(j)).powi(2 * m as i32);
        constant += scale * (w_c + w_s);
        amps.push(sign * scale * (w_c - w_s));
        j += 1;
    }
    (constant, amps)
}

/// Grid sup of `S(x)` on `t / (grid - 1)`. Uses `S(x) = S(1 - x)`; for even
/// `m` with non-increasing weights every amplitude is non-negative and the sup
/// is `S(0)`.
fn diagonal_sup<T: Scalar>(weights: &[T], m: usize, grid: usize) -> T {
    let (constant, amps) = diagonal_cosine_series(weights, m);
    if amps.iter().all(|&a| a >= T::zero()) {
        return constant + amps.iter().copied().sum::<T>();
    }
    // Drop the tail once it cannot move the result by more than 1e-15 relative.
    let mut tail = amps.iter().map(|a| a.abs()).sum::<T>();
    let floor = T::lit(1e-15) * constant.abs().max(T::min_positive_value());
    let mut keep = amps.len();
    for (j, a) in amps.iter().enumerate() {
        if tail <= floor {
            keep = j;
            break;
        }
        tail -= a.abs();
    }
    let amps = &amps[..keep];
    let xs = unit_grid::<T>(grid);
    let half = xs.len().div_ceil(2);
    let mut best = T::neg_infinity();
    for &x in &xs[..half] {
        let th = T::lit(4.0) * T::PI() * x;
        let (s1, c1) = th.sin_cos();
        let (mut c, mut s) = (T::one(), T::zero());
        let mut acc = constant;
        for (idx, &a) in amps.iter().enumerate() {
            let j = idx + 1;
            if j % 32 == 1 {
                let (sj, cj) = (th * T::from_usize_lossy(j)).sin_cos();
                c = cj;
                s = sj;
            } else {
                let cn = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = cn;
            }
            acc += a * c;
        }
        best = best.max(acc);
    }
    best
}

/// `kappa_tilde_m^2 = sup_x sum_i nu_i (psi_i^{(m)}(x))^2` over the sup grid.
pub fn effective_dimension_beta<T: Scalar>(k: &SpectralKernel<T>, lambda: T, m: usize) -> Result<T> {
    effective_dimension_grid(k, lambda, m, SUP_GRID)
}

/// [`effective_dimension_beta`] on a grid of `grid` points.
pub fn effective_dimension_grid<T: Scalar>(
    k: &SpectralKernel<T>,
    lambda: T,
    m: usize,
    grid: usize,
) -> Result<T> {
    check_lambda(lambda)?;
    k.check_order(m)?;
    let nu = equivalent_eigenvalues(k, lambda);
    Ok(diagonal_sup(&nu, m, grid))
}

/// `kappa_tilde_m = sqrt(effective_dimension_beta)`.
pub fn kappa_tilde<T: Scalar>(k: &SpectralKernel<T>, lambda: T, m: usize) -> Result<T> {
    effective_dimension_beta(k, lambda, m).map(|v| v.sqrt())
}

/// `kappa_beta = sqrt(sup_x d^{beta,beta} K(x, x))` over a grid of
/// `grid_per_axis` points per coordinate of `[0, 1]^d`, `d <= 2`.
pub fn kappa_beta<T: Scalar>(kernel: &KernelSpec<T>, beta: &MultiIndex, grid_per_axis: usize) -> Result<T> {
    let d = beta.dim();
    if d == 0 || d > 2 {
        return Err(Error::InvalidParameter(format!("kappa_beta supports d in {{1, 2}}, got {d}")));
    }
    if let KernelSpec::Spectral(s) = kernel {
        let m = beta.as_slice()[0];
        if !s.offers(m, m) {
            return Err(Error::UnsupportedDerivativeOrder {
                a: vec![m],
                b: vec![m],
                kernel: kernel.to_string(),
            });
        }
        return Ok(diagonal_sup(s.eigenvalues(), m, grid_per_axis).sqrt());
    }
    let axis = unit_grid::<T>(grid_per_axis);
    let mut best = T::zero();
    let mut point = vec![T::zero(); d];
    let mut visit = |p: &[T]| -> Result<()> {
        let v = kernel.partial(beta, beta, p, p)?;
        best = best.max(v);
        Ok(())
    };
    if d == 1 {
        for &x in &axis {
            point[0] = x;
            visit(&point)?;
        }
    } else {
        for &x in &axis {
            for &y in &axis {
                point[0] = x;
                point[1] = y;
                visit(&point)?;
            }
        }
    }
    Ok(best.sqrt())
}

/// `C(n, kappa) = kappa^2 sqrt(20 log n) / sqrt(n) (4 + 4 kappa sqrt(20 log n) / (3 sqrt n))`.
pub fn c_n_kappa<T: Scalar>(n: usize, kappa_tilde: T) -> T {
    let nf = T::from_usize_lossy(n);
    let r = (T::lit(20.0) * nf.ln()).sqrt() / nf.sqrt();
    kappa_tilde * kappa_tilde * r * (T::lit(4.0) + T::lit(4.0) * kappa_tilde * r / T::lit(3.0))
}

/// Which high-probability bound a report assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    EquivalentKernel,
    Rkhs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundReport<T> {
    pub kind: BoundKind,
    pub kappa_tilde2: T,
    pub kappa_tilde_beta2: T,
    pub kappa_beta: T,
    pub c_n_kappa: T,
    /// `sup |d^beta f_lambda - d^beta f_0|` on the sup grid.
    pub flambda_gap_sup: T,
    /// `sup |f_lambda - f_0|` on the sup grid.
    pub flambda_gap0_sup: T,
    /// Additive terms whose sum is `bound_value`.
    pub terms: [T; 3],
    pub bound_value: T,
    pub caveat: &'static str,
}

impl<T: Scalar> BoundReport<T> {
    /// Sum of the stored terms; equals `bound_value`.
    pub fn recompute(&self) -> T {
        self.terms[0] + self.terms[1] + self.terms[2]
    }
}

fn check_series_fits<T: Scalar>(f0: &HolderFunction<T>, k: &SpectralKernel<T>) -> Result<()> {
    if f0.terms() > k.terms() {
        return Err(Error::DimensionMismatch {
            context: "series length vs kernel terms",
            expected: k.terms(),
            found: f0.terms(),
        });
    }
    Ok(())
}

/// Equivalent-kernel bound on `|d^m f_hat - d^m f_0|_inf` (probability at
/// least `1 - n^{-10}`):
/// `gap_m + kt_m/kt C/(1-C) gap_0 + 1/(1-C) kt_m kt sigma sqrt(20 log n)/sqrt n`.
pub fn equivalent_kernel_bound<T: Scalar>(
    k: &SpectralKernel<T>,
    f0: &HolderFunction<T>,
    lambda: T,
    n: usize,
    sigma: T,
    m: usize,
) -> Result<BoundReport<T>> {
    check_lambda(lambda)?;
    check_series_fits(f0, k)?;
    if n < 2 {
        return Err(Error::InvalidParameter("bounds need n >= 2".into()));
    }
    let kt2 = effective_dimension_beta(k, lambda, 0)?;
    let ktb2 = effective_dimension_beta(k, lambda, m)?;
    let (kt, ktb) = (kt2.sqrt(), ktb2.sqrt());
    let c = c_n_kappa(n, kt);
    if c >= T::one() {
        return Err(Error::NonContractive { c: c.as_f64() });
    }
    let gap = f_lambda_gap(f0.coefficients(), k, lambda)?;
    let gap_b = series_sup(&gap, m, SUP_GRID);
    let gap_0 = series_sup(&gap, 0, SUP_GRID);
    let nf = T::from_usize_lossy(n);
    let one_minus = T::one() - c;
    let t1 = ktb / kt * c / one_minus * gap_0;
    let t2 = ktb * kt * sigma * (T::lit(20.0) * nf.ln()).sqrt() / (nf.sqrt() * one_minus);
    let kb = kappa_beta(&KernelSpec::Spectral(k.clone()), &MultiIndex::scalar(m), SUP_GRID)?;
    let terms = [gap_b, t1, t2];
    Ok(BoundReport {
        kind: BoundKind::EquivalentKernel,
        kappa_tilde2: kt2,
        kappa_tilde_beta2: ktb2,
        kappa_beta: kb,
        c_n_kappa: c,
        flambda_gap_sup: gap_b,
        flambda_gap0_sup: gap_0,
        terms,
        bound_value: gap_b + t1 + t2,
        caveat: UNIVERSAL_CONSTANT_CAVEAT,
    })
}

/// Constants of the RKHS bound that do not depend on `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkhsConstants<T> {
    pub kappa: T,
    pub kappa_beta: T,
    pub m_const: T,
}

impl<T: Scalar> RkhsConstants<T> {
    pub fn new(k: &SpectralKernel<T>, f0: &HolderFunction<T>, sigma: T, m: usize) -> Result<Self> {
        let spec = KernelSpec::Spectral(k.clone());
        let kappa = kappa_beta(&spec, &MultiIndex::scalar(0), SUP_GRID)?;
        let kb = kappa_beta(&spec, &MultiIndex::scalar(m), SUP_GRID)?;
        let m_const = f0.sup_norm(0, SUP_GRID).max(sigma);
        Ok(Self { kappa, kappa_beta: kb, m_const })
    }

    /// `2 kappa kappa_beta M sqrt(L) / (sqrt(n) lambda) (10 + 2 + 8 kappa sqrt(L) / (3 sqrt(n lambda)))`
    /// with `L = log(1/delta)`.
    pub fn stochastic_term(&self, lambda: T, n: usize, delta: T) -> T {
        let nf = T::from_usize_lossy(n);
        let l = (T::one() / delta).ln().sqrt();
        let lead = T::lit(2.0) * self.kappa * self.kappa_beta * self.m_const * l / (nf.sqrt() * lambda);
        lead * (T::lit(12.0) + T::lit(8.0) * self.kappa * l / (T::lit(3.0) * (nf * lambda).sqrt()))
    }
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// RKHS-norm bound (probability at least `1 - delta`) on the order-`m`
/// derivative error.
pub fn rkhs_bound<T: Scalar>(
    k: &SpectralKernel<T>,
    f0: &HolderFunction<T>,
    lambda: T,
    n: usize,
    sigma: T,
    m: usize,
    delta: T,
) -> Result<BoundReport<T>> {
    check_lambda(lambda)?;
    check_delta(delta)?;
    check_series_fits(f0, k)?;
    k.check_order(m)?;
    let consts = RkhsConstants::new(k, f0, sigma, m)?;
    rkhs_bound_with(k, f0, lambda, n, m, delta, &consts)
}

pub fn rkhs_bound_with<T: Scalar>(
    k: &SpectralKernel<T>,
    f0: &HolderFunction<T>,
    lambda: T,
    n: usize,
    m: usize,
    delta: T,
    consts: &RkhsConstants<T>,
) -> Result<BoundReport<T>> {
    let gap = f_lambda_gap(f0.coefficients(), k, lambda)?;
    let gap_b = series_sup(&gap, m, SUP_GRID);
    let gap_0 = series_sup(&gap, 0, SUP_GRID);
    let stoch = consts.stochastic_term(lambda, n, delta);
    let kt2 = effective_dimension_beta(k, lambda, 0)?;
    let ktb2 = effective_dimension_beta(k, lambda, m)?;
    let terms = [gap_b, stoch, T::zero()];
    Ok(BoundReport {
        kind: BoundKind::Rkhs,
        kappa_tilde2: kt2,
        kappa_tilde_beta2: ktb2,
        kappa_beta: consts.kappa_beta,
        c_n_kappa: c_n_kappa(n, kt2.sqrt()),
        flambda_gap_sup: gap_b,
        flambda_gap0_sup: gap_0,
        terms,
        bound_value: gap_b + stoch,
        caveat: UNIVERSAL_CONSTANT_CAVEAT,
    })
}

/// `lambda` where the increasing gap term meets the decreasing stochastic
/// term, by bisection on `log lambda` within `[lo, hi]`.
pub fn rkhs_bound_crossover<T: Scalar>(
    k: &SpectralKernel<T>,
    f0: &HolderFunction<T>,
    n: usize,
    sigma: T,
    m: usize,
    delta: T,
    lo: T,
    hi: T,
) -> Result<T> {
    check_lambda(lo)?;
    check_lambda(hi)?;
    check_delta(delta)?;
    check_series_fits(f0, k)?;
    k.check_order(m)?;
    let consts = RkhsConstants::new(k, f0, sigma, m)?;
    let g = |lambda: T| -> Result<T> {
        let gap = f_lambda_gap(f0.coefficients(), k, lambda)?;
        Ok(series_sup(&gap, m, SUP_GRID) - consts.stochastic_term(lambda, n, delta))
    };
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (ga, gb) = (g(lo)?, g(hi)?);
    if ga > T::zero() || gb < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "no crossover in [{lo}, {hi}]: gap minus stochastic term is {ga} and {gb} at the ends"
        )));
    }
    for _ in 0..60 {
        let mid = (a + b) * T::lit(0.5);
        if g(mid.exp())? < T::zero() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(((a + b) * T::lit(0.5)).exp())
}

/// A log-log power law fitted to a quantity evaluated along a `lambda` path.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ScalingFit<T> {
    pub order: usize,
    pub lambdas: Vec<T>,
    pub values: Vec<T>,
    pub slope: T,
    pub slope_se: T,
    pub theoretical_slope: T,
}

fn scaling_fit<T: Scalar>(order: usize, lambdas: &[T], values: Vec<T>, theoretical_slope: T) -> Result<ScalingFit<T>> {
    if values.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::InvalidParameter("log-log fit needs positive values".into()));
    }
    let lx: Vec<T> = lambdas.iter().map(|l| l.ln()).collect();
    let ly: Vec<T> = values.iter().map(|v| v.ln()).collect();
    let fit = crate::stats::fit_line(&lx, &ly)?;
    Ok(ScalingFit {
        order,
        lambdas: lambdas.to_vec(),
        values,
        slope: fit.slope,
        slope_se: fit.slope_se,
        theoretical_slope,
    })
}

/// Slope of `log kappa_tilde_m^2` against `log lambda`; the predicted value
/// is `-(2m + 1) / (2 alpha)`.
pub fn effective_dimension_scaling<T: Scalar>(k: &SpectralKernel<T>, lambdas: &[T], m: usize) -> Result<ScalingFit<T>> {
    k.check_order(m)?;
    let values = lambdas.iter().map(|&l| effective_dimension_beta(k, l, m)).collect::<Result<Vec<_>>>()?;
    let theory = -T::from_usize_lossy(2 * m + 1) / (T::lit(2.0) * k.alpha());
    scaling_fit(m, lambdas, values, theory)
}

/// Slope of `log sup |f_lambda^{(m)} - f_0^{(m)}|` against `log lambda`; the
/// predicted value is `1/2 - m / (2 alpha)` for a Hölder-`alpha` target.
pub fn bias_scaling<T: Scalar>(
    k: &SpectralKernel<T>,
    f0: &HolderFunction<T>,
    lambdas: &[T],
    m: usize,
) -> Result<ScalingFit<T>> {
    check_series_fits(f0, k)?;
    if m > f0.max_order() {
        return Err(Error::InvalidParameter(format!("order {m} exceeds the target smoothness")));
    }
    let values = lambdas
        .iter()
        .map(|&l| Ok(series_sup(&f_lambda_gap(f0.coefficients(), k, l)?, m, SUP_GRID)))
        .collect::<Result<Vec<_>>>()?;
    let theory = T::lit(0.5) - T::from_usize_lossy(m) / (T::lit(2.0) * k.alpha());
    scaling_fit(m, lambdas, values, theory)
}

/// Largest observed ratio `sup |f^{(m)}| / (kappa_tilde_m |f|_{H~})` over
/// random series `f_i = g_i mu_i^s` with `g_i` standard normal. Only the
/// first `terms` coefficients are drawn.
pub fn rkhs_norm_inequality_check<T: Scalar>(
    k: &SpectralKernel<T>,
    lambda: T,
    m: usize,
    trials: usize,
    s: T,
    terms: usize,
    seed: u64,
) -> Result<T> {
    check_lambda(lambda)?;
    if s < T::lit(0.5) {
        return Err(Error::InvalidParameter(format!("exponent s must be at least 1/2, got {s}")));
    }
    let kt = kappa_tilde(k, lambda, m)?;
    let terms = terms.min(k.terms()).max(1);
    let mu = &k.eigenvalues()[..terms];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..trials {
        let f: Vec<T> = mu.iter().map(|&m_i| T::lit(rng.sample::<f64, _>(StandardNormal)) * m_i.powf(s)).collect();
        let norm2: T = f.iter().zip(mu).map(|(&c, &m_i)| c * c * (lambda + m_i) / m_i).sum();
        let sup = series_sup(&f, m, SUP_GRID);
        if norm2 > T::zero() {
            worst = worst.max(sup / (kt * norm2.sqrt()));
        }
    }
    Ok(worst)
}

/// Largest observed ratio `sup |d^beta f| / (kappa_beta |f|_H)` over random
/// finite expansions `f = sum_j c_j K(., z_j)` with `|f|_H^2 = c^T K(Z, Z) c`.
/// Inputs are drawn in `[0, 1]^d`; sups use `grid_per_axis` points per axis.
pub fn rkhs_norm_inequality_check_general<T: Scalar>(
    kernel: &KernelSpec<T>,
    beta: &MultiIndex,
    trials: usize,
    centers: usize,
    grid_per_axis: usize,
    seed: u64,
) -> Result<T> {
    let d = beta.dim();
    let kb = kappa_beta(kernel, beta, grid_per_axis)?;
    let axis = unit_grid::<T>(grid_per_axis);
    let grid: Vec<Vec<T>> = if d == 1 {
        axis.iter().map(|&x| vec![x]).collect()
    } else {
        axis.iter().flat_map(|&x| axis.iter().map(move |&y| vec![x, y])).collect()
    };
    let grid = Matrix::from_rows(&grid)?;
    let zero = MultiIndex::zeros(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..trials {
        let z: Vec<Vec<T>> = (0..centers)
            .map(|_| (0..d).map(|_| T::lit(rng.random::<f64>())).collect())
            .collect();
        let z = Matrix::from_rows(&z)?;
        let c: Vec<T> = (0..centers).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
        let g = kernel.gram(&z)?;
        let norm2 = dot(&c, &g.matvec(&c)?);
        if !(norm2 > T::zero()) {
            continue;
        }
        let cross = kernel.cross_partial(beta, &zero, &grid, &z)?;
        let vals = cross.matvec(&c)?;
        let sup = vals.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        worst = worst.max(sup / (kb * norm2.sqrt()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_eigenvalue_halves() {
        let k = SpectralKernel::new(2.0_f64, 1).unwrap();
        assert_eq!(equivalent_eigenvalues(&k, 1.0), vec![0.5]);
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(default_truncation(1e-4_f64, 2.0), 100_000);
        let big = default_truncation(1e-16_f64, 2.0);
        assert!((500_000..=500_001).contains(&big));
    }

    #[test]
    fn c_n_kappa_formula() {
        let n = 1000usize;
        let r = (20.0 * (n as f64).ln()).sqrt() / (n as f64).sqrt();
        let want = 0.64 * r * (4.0 + 4.0 * 0.8 * r / 3.0);
        assert!((c_n_kappa(n, 0.8_f64) - want).abs() < 1e-15);
    }

    fn direct_diagonal(k: &SpectralKernel<f64>, lambda: f64, m: usize, x: f64) -> f64 {
        let nu = equivalent_eigenvalues(k, lambda);
        (0..k.terms()).map(|i| nu[i] * basis::basis(i + 1, m, x).powi(2)).sum()
    }

    #[test]
    fn sup_matches_direct_summation() {
        let k = SpectralKernel::new(2.0_f64, 400).unwrap();
        for m in 0..2 {
            let fast = effective_dimension_grid(&k, 1e-3, m, 201).unwrap();
            let slow = unit_grid::<f64>(201)
                .into_iter()
                .map(|x| direct_diagonal(&k, 1e-3, m, x))
                .fold(f64::MIN, f64::max);
            assert!((fast - slow).abs() < 1e-10 * slow, "m={m}: {fast} vs {slow}");
            let env = effective_dimension_envelope(&k, 1e-3, m).unwrap();
            assert!(fast <= env);
        }
    }

    #[test]
    fn smoothness_guard() {
        let k = SpectralKernel::new(1.2_f64, 10).unwrap();
        assert!(matches!(
            effective_dimension_beta(&k, 0.1, 1),
            Err(Error::SmoothnessViolation { .. })
        ));
    }
}
