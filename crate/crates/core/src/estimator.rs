//! Plug-in kernel ridge regression for derivatives.
//!
//! A fitted model stores the dual weights `(K(X,X) + n lambda I)^{-1} y`.
//! The order-`beta` estimate at `x` is the row `d^beta_x K(x, X)` applied to
//! those weights, so one fit serves every derivative order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, MultiIndex};
use crate::linalg::{chol_shifted, dot, CholFactor, Matrix};
use crate::scalar::Scalar;
use crate::tuning::TuneResult;

/// Query rows are processed in blocks so the `q x n` cross matrix never
/// holds more than this many entries at once.
const QUERY_BLOCK_ENTRIES: usize = 10_000_000;

#[derive(Debug, Clone)]
pub struct FittedKrr<T> {
    kernel: KernelSpec<T>,
    design: Matrix<T>,
    response: Vec<T>,
    dual_weights: Vec<T>,
    chol: CholFactor<T>,
    lambda: T,
    sigma2: Option<T>,
}

impl<T: Scalar> FittedKrr<T> {
    pub fn fit(
        kernel: KernelSpec<T>,
        design: Matrix<T>,
        y: &[T],
        lambda: T,
        sigma2: Option<T>,
    ) -> Result<Self> {
        let gram = kernel.gram(&design)?;
        Self::fit_with_gram(kernel, design, &gram, y, lambda, sigma2)
    }

    /// Same as [`FittedKrr::fit`] with a precomputed `K(X, X)`.
    pub fn fit_with_gram(
        kernel: KernelSpec<T>,
        design: Matrix<T>,
        gram: &Matrix<T>,
        y: &[T],
        lambda: T,
        sigma2: Option<T>,
    ) -> Result<Self> {
        let n = design.rows();
        if y.len() != n {
            return Err(Error::DimensionMismatch { context: "responses", expected: n, found: y.len() });
        }
        if gram.rows() != n || gram.cols() != n {
            return Err(Error::DimensionMismatch { context: "gram matrix", expected: n, found: gram.rows() });
        }
        check_lambda(lambda)?;
        if let Some(s) = sigma2 {
            if !(s >= T::zero()) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("sigma2 must be non-negative, got {s}")));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("responses must be finite".into()));
        }
        let chol = chol_shifted(gram, T::from_usize_lossy(n) * lambda)?;
        let dual_weights = chol.solve_vec(y)?;
        Ok(Self { kernel, design, response: y.to_vec(), dual_weights, chol, lambda, sigma2 })
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn design(&self) -> &Matrix<T> {
        &self.design
    }

    pub fn response(&self) -> &[T] {
        &self.response
    }

    pub fn dual_weights(&self) -> &[T] {
        &self.dual_weights
    }

    pub fn chol(&self) -> &CholFactor<T> {
        &self.chol
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn sigma2(&self) -> Option<T> {
        self.sigma2
    }

    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn dim(&self) -> usize {
        self.design.cols()
    }

    /// Copy of the model with another noise variance, sharing every other field.
    pub fn with_sigma2(&self, sigma2: Option<T>) -> Self {
        Self { sigma2, ..self.clone() }
    }

    fn check_queries(&self, beta: &MultiIndex, xs: &Matrix<T>) -> Result<()> {
        if xs.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "query columns",
                expected: self.dim(),
                found: xs.cols(),
            });
        }
        if beta.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "derivative multi-index",
                expected: self.dim(),
                found: beta.dim(),
            });
        }
        let zero = MultiIndex::zeros(self.dim());
        if !self.kernel.offers(beta, &zero) {
            return Err(Error::UnsupportedDerivativeOrder {
                a: beta.as_slice().to_vec(),
                b: zero.as_slice().to_vec(),
                kernel: self.kernel.to_string(),
            });
        }
        Ok(())
    }

    /// Visits `d^beta_x K(x_t, X)` for every query row, block by block.
    fn for_each_row(
        &self,
        beta: &MultiIndex,
        xs: &Matrix<T>,
        mut f: impl FnMut(usize, &[T]) -> Result<()>,
    ) -> Result<()> {
        self.check_queries(beta, xs)?;
        if xs.rows() == 0 {
            return Ok(());
        }
        let block = (QUERY_BLOCK_ENTRIES / self.n().max(1)).max(1);
        let mut start = 0;
        while start < xs.rows() {
            let end = (start + block).min(xs.rows());
            let rows: Vec<Vec<T>> = (start..end)
                .map(|t| self.kernel.cross_partial_row(beta, xs.row(t), &self.design))
                .collect::<Result<_>>()?;
            for (off, r) in rows.iter().enumerate() {
                f(start + off, r)?;
            }
            start = end;
        }
        Ok(())
    }

    /// `d^beta f_hat(x_t) = d^beta_x K(x_t, X) w` for each query row.
    pub fn predict_deriv(&self, beta: &MultiIndex, xs: &Matrix<T>) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); xs.rows()];
        self.for_each_row(beta, xs, |t, r| {
            out[t] = dot(r, &self.dual_weights);
            Ok(())
        })?;
        Ok(out)
    }

    /// `sigma^2 r^T (K + n lambda I)^{-2} r` with `r = d^beta_x K(x_t, X)`.
    pub fn predict_variance(&self, beta: &MultiIndex, xs: &Matrix<T>) -> Result<Vec<T>> {
        let s2 = self.sigma2.ok_or(Error::MissingSigma2)?;
        let mut out = vec![T::zero(); xs.rows()];
        self.for_each_row(beta, xs, |t, r| {
            let u = self.chol.solve_vec(r)?;
            out[t] = s2 * dot(&u, &u);
            Ok(())
        })?;
        Ok(out)
    }

    pub fn to_document(&self, tune: Option<TuneResult<T>>) -> ModelDocument<T> {
        ModelDocument {
            kernel: self.kernel.to_string(),
            lambda: self.lambda,
            sigma2: self.sigma2,
            design: self.design.to_rows(),
            response: self.response.clone(),
            dual_weights: self.dual_weights.clone(),
            tune,
        }
    }

    /// Rebuilds a model from its document. The Cholesky factor is recomputed;
    /// the stored dual weights are kept as written.
    pub fn from_document(doc: &ModelDocument<T>) -> Result<Self> {
        let kernel: KernelSpec<T> = doc.kernel.parse()?;
        let design = Matrix::from_rows(&doc.design)?;
        let n = design.rows();
        if doc.dual_weights.len() != n {
            return Err(Error::DimensionMismatch {
                context: "dual weights",
                expected: n,
                found: doc.dual_weights.len(),
            });
        }
        let mut model = Self::fit(kernel, design, &doc.response, doc.lambda, doc.sigma2)?;
        model.dual_weights = doc.dual_weights.clone();
        Ok(model)
    }
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelDocument<T> {
    pub kernel: String,
    pub lambda: T,
    pub sigma2: Option<T>,
    pub design: Vec<Vec<T>>,
    pub response: Vec<T>,
    pub dual_weights: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneResult<T>>,
}

/// Maximum absolute gap at the design points between the closed-form fit and
/// an independent conjugate-gradient minimization of
/// `(1/n) |y - K c|^2 + lambda c^T K c` over dual coefficients `c`.
pub fn representer_check<T: Scalar>(
    kernel: &KernelSpec<T>,
    design: &Matrix<T>,
    y: &[T],
    lambda: T,
) -> Result<T> {
    let n = design.rows();
    let gram = kernel.gram(design)?;
    let model = FittedKrr::fit_with_gram(kernel.clone(), design.clone(), &gram, y, lambda, None)?;
    let closed = gram.matvec(model.dual_weights())?;

    let nl = T::from_usize_lossy(n) * lambda;
    let scale = T::lit(2.0) / T::from_usize_lossy(n);
    // Hessian-vector product of the objective: (2/n) (K K v + n lambda K v).
    let hess = |v: &[T]| -> Result<Vec<T>> {
        let kv = gram.matvec(v)?;
        let kkv = gram.matvec(&kv)?;
        Ok(kkv.iter().zip(&kv).map(|(&a, &b)| scale * (a + nl * b)).collect())
    };
    let b: Vec<T> = gram.matvec(y)?.into_iter().map(|v| scale * v).collect();
    let b_norm = dot(&b, &b).sqrt();
    let mut c = vec![T::zero(); n];
    if b_norm > T::zero() {
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let tol = T::lit(1e-15) * b_norm;
        for _ in 0..20 * n {
            if rr.sqrt() <= tol {
                break;
            }
            let hp = hess(&p)?;
            let php = dot(&p, &hp);
            if !(php > T::zero()) {
                break;
            }
            let step = rr / php;
            for i in 0..n {
                c[i] += step * p[i];
                r[i] -= step * hp[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
    }
    let iterative = gram.matvec(&c)?;
    Ok(closed
        .iter()
        .zip(&iterative)
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max))
}
