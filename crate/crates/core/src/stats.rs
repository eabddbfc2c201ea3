//! Small descriptive-statistics helpers.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Standard error of the slope (`NaN` with fewer than three points).
    pub slope_se: T,
}

pub fn fit_line<T: Scalar>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { context: "line fit", expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter("a line fit needs at least two points".into()));
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let sxx: T = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::InvalidParameter("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if x.len() > 2 {
        let rss: T = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (n - T::lit(2.0)) / sxx).sqrt()
    } else {
        T::nan()
    };
    Ok(LineFit { slope, intercept, slope_se })
}

/// Root mean squared difference.
pub fn rmse<T: Scalar>(estimate: &[T], truth: &[T]) -> Result<T> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch { context: "rmse", expected: truth.len(), found: estimate.len() });
    }
    if truth.is_empty() {
        return Err(Error::DimensionMismatch { context: "rmse", expected: 1, found: 0 });
    }
    let ss: T = estimate.iter().zip(truth).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((ss / T::from_usize_lossy(truth.len())).sqrt())
}

/// Linear-interpolation quantile (type 7) of finite values; `None` when empty.
pub fn quantile<T: Scalar>(values: &[T], q: T) -> Option<T> {
    let mut v: Vec<T> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let h = (T::from_usize_lossy(v.len() - 1)) * q;
    let lo = h.floor().to_usize().unwrap_or(0).min(v.len() - 1);
    let hi = (lo + 1).min(v.len() - 1);
    let frac = h - T::from_usize_lossy(lo);
    Some(v[lo] + (v[hi] - v[lo]) * frac)
}

pub fn median<T: Scalar>(values: &[T]) -> Option<T> {
    quantile(values, T::lit(0.5))
}

pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len()))
    }
}
