use crate::error::{Error, Result};
use crate::linalg::{chol_shifted, Matrix};
use crate::scalar::Scalar;
use crate::spectral::SpectralKernel;

/// Kernel ridge regression with a truncated spectral kernel, solved in
/// feature space. With `Phi[k, i] = psi_i(x_k)` and `D = diag(mu)`,
///
/// `f_hat = sum_i c_i psi_i`, `c = D^{1/2} (D^{1/2} Phi^T Phi D^{1/2} + n lambda I)^{-1} D^{1/2} Phi^T y`,
///
/// which equals the dual solution `K(., X) (K + n lambda I)^{-1} y` for the
/// same truncated kernel but costs `O(n N^2)` once plus `O(N^3)` per `lambda`.
#[derive(Debug, Clone)]
pub struct FeatureKrr<T> {
    n: usize,
    sqrt_mu: Vec<T>,
    /// `D^{1/2} Phi^T Phi D^{1/2}`.
    scaled_gram: Matrix<T>,
    /// `D^{1/2} Phi^T y`.
    scaled_rhs: Vec<T>,
}

impl<T: Scalar> FeatureKrr<T> {
    pub fn new(kernel: &SpectralKernel<T>, xs: &[T], y: &[T]) -> Result<Self> {
        if xs.len() != y.len() {
            return Err(Error::DimensionMismatch { context: "responses", expected: xs.len(), found: y.len() });
        }
        if xs.is_empty() {
            return Err(Error::DimensionMismatch { context: "design rows", expected: 1, found: 0 });
        }
        let n_terms = kernel.terms();
        let sqrt_mu: Vec<T> = kernel.eigenvalues().iter().map(|m| m.sqrt()).collect();
        let mut phi = kernel.feature_matrix(xs, 0);
        for k in 0..xs.len() {
            for (v, r) in phi.row_mut(k).iter_mut().zip(&sqrt_mu) {
                *v *= *r;
            }
        }
        // Upper triangle of (Phi D^{1/2})^T (Phi D^{1/2}), accumulated row by row.
        let mut g = Matrix::zeros(n_terms, n_terms);
        for k in 0..xs.len() {
            let row = phi.row(k);
            for i in 0..n_terms {
                let ri = row[i];
                let gi = &mut g.row_mut(i)[i..];
                for (gij, &rj) in gi.iter_mut().zip(&row[i..]) {
                    *gij += ri * rj;
                }
            }
        }
        for i in 0..n_terms {
            for j in 0..i {
                let v = g[(j, i)];
                g[(i, j)] = v;
            }
        }
        let mut rhs = vec![T::zero(); n_terms];
        for (k, &yk) in y.iter().enumerate() {
            for (r, &p) in rhs.iter_mut().zip(phi.row(k)) {
                *r += p * yk;
            }
        }
        Ok(Self { n: xs.len(), sqrt_mu, scaled_gram: g, scaled_rhs: rhs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Series coefficients `c` of the fitted function.
    pub fn coefficients(&self, lambda: T) -> Result<Vec<T>> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let chol = chol_shifted(&self.scaled_gram, T::from_usize_lossy(self.n) * lambda)?;
        let theta = chol.solve_vec(&self.scaled_rhs)?;
        Ok(theta.iter().zip(&self.sqrt_mu).map(|(&t, &s)| t * s).collect())
    }
}
