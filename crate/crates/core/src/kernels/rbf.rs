use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Squared-exponential kernel `exp(-|u|^2 / (2 l^2))`, a product of
/// one-dimensional factors, so every mixed partial is available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rbf<T> {
    lengthscale: T,
}

impl<T: Scalar> Rbf<T> {
    pub fn new(lengthscale: T) -> Result<Self> {
        if !(lengthscale > T::zero()) || !lengthscale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "RBF lengthscale must be positive, got {lengthscale}"
            )));
        }
        Ok(Self { lengthscale })
    }

    pub fn lengthscale(&self) -> T {
        self.lengthscale
    }

    /// `d^p/du^p exp(-u^2/(2 l^2)) = (-1)^p l^{-p} He_p(u/l) exp(-u^2/(2 l^2))`.
    pub fn lag_derivative(&self, p: usize, u: T) -> T {
        let t = u / self.lengthscale;
        let g = (-(t * t) * T::lit(0.5)).exp();
        if p == 0 {
            return g;
        }
        let he = hermite_prob(p, t);
        let v = he * g / self.lengthscale.powi(p as i32);
        if p % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// Mixed partial of one coordinate factor.
    pub fn factor_partial(&self, a: usize, b: usize, x: T, y: T) -> T {
        let v = self.lag_derivative(a + b, x - y);
        if b % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// Probabilists' Hermite polynomial `He_p(t)`.
pub fn hermite_prob<T: Scalar>(p: usize, t: T) -> T {
    let mut prev = T::one();
    if p == 0 {
        return prev;
    }
    let mut cur = t;
    for k in 1..p {
        let next = t * cur - T::from_usize_lossy(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}
