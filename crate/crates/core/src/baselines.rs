//! Local polynomial regression with a Gaussian window, used as the comparison
//! derivative estimator.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tuning::log_grid;

pub const CV_FOLDS: usize = 5;

/// A pivot below this fraction of its diagonal entry marks the window as rank
/// deficient.
const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPolyConfig<T> {
    pub degree: usize,
    pub bandwidth: T,
}

impl<T: Scalar> LocalPolyConfig<T> {
    pub fn new(degree: usize, bandwidth: T) -> Result<Self> {
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { degree, bandwidth })
    }
}

/// 20 log-spaced bandwidths on `[0.01, 0.5]`.
pub fn default_bandwidth_grid<T: Scalar>() -> Vec<T> {
    log_grid(T::lit(0.01), T::lit(0.5), 20).expect("static grid")
}

fn check_data<T: Scalar>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { context: "responses", expected: x.len(), found: y.len() });
    }
    if x.is_empty() {
        return Err(Error::DimensionMismatch { context: "design rows", expected: 1, found: 0 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("data must be finite".into()));
    }
    Ok(())
}

/// Weighted least squares fit of a degree-`p` polynomial in `(X_i - x0) / h`
/// and returns `k! beta_k / h^k`.
pub fn locpoly_at<T: Scalar>(x: &[T], y: &[T], cfg: &LocalPolyConfig<T>, k: usize, x0: T) -> Result<T> {
    let p = cfg.degree;
    let m = p + 1;
    let h = cfg.bandwidth;
    let half = T::lit(0.5);
    // Normal equations in the scaled coordinate: moments of w t^j, j <= 2p.
    let mut moments = vec![T::zero(); 2 * p + 1];
    let mut rhs = vec![T::zero(); m];
    for (&xi, &yi) in x.iter().zip(y) {
        let t = (xi - x0) / h;
        let w = (-half * t * t).exp();
        if w == T::zero() {
            continue;
        }
        let mut v = w;
        for (j, mo) in moments.iter_mut().enumerate() {
            *mo += v;
            if j < m {
                rhs[j] += v * yi;
            }
            v *= t;
        }
    }
    let mut gram: Vec<T> = (0..m * m).map(|i| moments[i / m + i % m]).collect();
    let beta = solve_spd_strict(&mut gram, &mut rhs, m).ok_or(Error::RankDeficientWindow { x: x0.as_f64() })?;
    let fact: T = (1..=k).map(T::from_usize_lossy).fold(T::one(), |a, b| a * b);
    Ok(fact * beta[k] / h.powi(k as i32))
}

/// Cholesky solve without jitter; `None` when a pivot collapses.
fn solve_spd_strict<T: Scalar>(a: &mut [T], b: &mut [T], m: usize) -> Option<Vec<T>> {
    let tol = T::lit(PIVOT_TOLERANCE);
    let diag: Vec<T> = (0..m).map(|i| a[i * m + i]).collect();
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if !(d > tol * diag[j]) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * m + k] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in i + 1..m {
            s -= a[k * m + i] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    Some(b.to_vec())
}

/// `k`-th derivative estimate at every query; rank-deficient windows yield `None`.
pub fn locpoly_deriv<T: Scalar>(
    x: &[T],
    y: &[T],
    cfg: &LocalPolyConfig<T>,
    k: usize,
    xs: &[T],
) -> Result<Vec<Option<T>>> {
    check_data(x, y)?;
    if k > cfg.degree {
        return Err(Error::InvalidParameter(format!(
            "derivative order {k} exceeds polynomial degree {}",
            cfg.degree
        )));
    }
    xs.iter()
        .map(|&q| match locpoly_at(x, y, cfg, k, q) {
            Ok(v) => Ok(Some(v)),
            Err(Error::RankDeficientWindow { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Fold label of every observation: a seeded shuffle dealt round-robin.
pub fn cv_folds(n: usize, seed: u64) -> Vec<usize> {
    let folds = CV_FOLDS.min(n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut label = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = pos % folds;
    }
    label
}

/// Mean squared held-out error of the regression-function fit; infinite when
/// any held-out window is rank deficient.
pub fn cv_score<T: Scalar>(x: &[T], y: &[T], degree: usize, bandwidth: T, folds: &[usize]) -> Result<T> {
    check_data(x, y)?;
    if folds.len() != x.len() {
        return Err(Error::DimensionMismatch { context: "fold labels", expected: x.len(), found: folds.len() });
    }
    let cfg = LocalPolyConfig::new(degree, bandwidth)?;
    let n_folds = folds.iter().copied().max().unwrap_or(0) + 1;
    let mut sse = T::zero();
    for f in 0..n_folds {
        let (mut tx, mut ty, mut hx, mut hy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..x.len() {
            if folds[i] == f {
                hx.push(x[i]);
                hy.push(y[i]);
            } else {
                tx.push(x[i]);
                ty.push(y[i]);
            }
        }
        if tx.is_empty() {
            return Ok(T::infinity());
        }
        for (q, &target) in hx.iter().zip(&hy) {
            match locpoly_at(&tx, &ty, &cfg, 0, *q) {
                Ok(v) => sse += (v - target) * (v - target),
                Err(Error::RankDeficientWindow { .. }) => return Ok(T::infinity()),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(sse / T::from_usize_lossy(x.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthChoice<T> {
    pub bandwidth: T,
    pub score: T,
    /// `(h, score)` for every candidate, ascending in `h`.
    pub scores: Vec<(T, T)>,
}

/// 5-fold cross validation of the bandwidth; ties go to the smaller `h`.
pub fn cv_bandwidth<T: Scalar>(
    x: &[T],
    y: &[T],
    degree: usize,
    h_grid: &[T],
    seed: u64,
) -> Result<BandwidthChoice<T>> {
    check_data(x, y)?;
    if h_grid.is_empty() {
        return Err(Error::EmptyGrid("bandwidth"));
    }
    let mut grid = h_grid.to_vec();
    for &h in &grid {
        LocalPolyConfig::new(degree, h)?;
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    let folds = cv_folds(x.len(), seed);
    let scores: Vec<(T, T)> = grid
        .par_iter()
        .map(|&h| cv_score(x, y, degree, h, &folds).map(|s| (h, s)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 < scores[best].1 {
            best = i;
        }
    }
    if !scores[best].1.is_finite() {
        return Err(Error::InvalidParameter("every candidate bandwidth leaves a rank-deficient window".into()));
    }
    Ok(BandwidthChoice { bandwidth: scores[best].0, score: scores[best].1, scores })
}
