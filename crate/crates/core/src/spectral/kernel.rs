use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::spectral::basis;

/// Truncated Mercer kernel `K(x, y) = sum_{i <= N} mu_i psi_i(x) psi_i(y)`
/// with polynomial eigenvalues `mu_i = i^{-2 alpha}` over the trigonometric
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernel<T> {
    alpha: T,
    mu: Vec<T>,
}

impl<T: Scalar> SpectralKernel<T> {
    pub fn new(alpha: T, terms: usize) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if terms == 0 {
            return Err(Error::InvalidParameter("spectral kernel needs at least one term".into()));
        }
        let two_alpha = T::lit(2.0) * alpha;
        let mu = (1..=terms).map(|i| T::from_usize_lossy(i).powf(-two_alpha)).collect();
        Ok(Self { alpha, mu })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn terms(&self) -> usize {
        self.mu.len()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.mu
    }

    /// `mu_i` for a 1-based index.
    pub fn eigenvalue(&self, i: usize) -> T {
        self.mu[i - 1]
    }

    /// Whether the order-`m` derivative facilities apply: `alpha > m + 1/2`.
    pub fn supports_order(&self, m: usize) -> bool {
        self.alpha > T::from_usize_lossy(m) + T::lit(0.5)
    }

    pub fn check_order(&self, m: usize) -> Result<()> {
        if self.supports_order(m) {
            Ok(())
        } else {
            Err(Error::SmoothnessViolation { alpha: self.alpha.as_f64(), order: m })
        }
    }

    /// Largest `m` with `alpha > m + 1/2`, if any.
    pub fn max_order(&self) -> Option<usize> {
        if !self.supports_order(0) {
            return None;
        }
        let mut m = 0;
        while self.supports_order(m + 1) {
            m += 1;
        }
        Some(m)
    }

    pub fn offers(&self, a: usize, b: usize) -> bool {
        if a == 0 && b == 0 {
            return true;
        }
        self.supports_order(a) && self.supports_order(b)
    }

    pub fn eval(&self, x: T, y: T) -> T {
        self.partial(0, 0, x, y)
    }

    pub fn partial(&self, a: usize, b: usize, x: T, y: T) -> T {
        let n = self.terms();
        let fx = basis::features(x, a, n);
        let fy = basis::features(y, b, n);
        let mut acc = T::zero();
        for ((&m, &u), &v) in self.mu.iter().zip(&fx).zip(&fy) {
            acc += m * (u * v);
        }
        acc
    }

    /// Feature matrix `Phi[k, i] = psi_{i+1}^{(m)}(x_k)`.
    pub fn feature_matrix(&self, xs: &[T], m: usize) -> Matrix<T> {
        let n = self.terms();
        let mut out = Matrix::zeros(xs.len(), n);
        let mut buf = Vec::with_capacity(n);
        for (k, &x) in xs.iter().enumerate() {
            basis::features_into(x, m, n, &mut buf);
            out.row_mut(k).copy_from_slice(&buf);
        }
        out
    }

    /// Gram matrix through features (`n^2 N` work, exactly symmetric).
    pub fn gram(&self, xs: &[T]) -> Matrix<T> {
        let n = xs.len();
        let mut phi = self.feature_matrix(xs, 0);
        let roots: Vec<T> = self.mu.iter().map(|m| m.sqrt()).collect();
        for k in 0..n {
            for (v, r) in phi.row_mut(k).iter_mut().zip(&roots) {
                *v *= *r;
            }
        }
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = crate::linalg::dot(phi.row(i), phi.row(j));
                g.row_mut(i)[j] = v;
                g.row_mut(j)[i] = v;
            }
        }
        g
    }
}
