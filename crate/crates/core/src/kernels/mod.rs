//! Kernel family with analytic mixed partial derivatives.

mod matern;
mod rbf;
mod sobolev;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::spectral::SpectralKernel;

pub use matern::Matern;
pub use rbf::{hermite_prob, Rbf};
pub use sobolev::Sobolev2;

/// Derivative multi-index `(b_1, ..., b_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(orders: Vec<usize>) -> Self {
        Self(orders)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// One-dimensional order `k`.
    pub fn scalar(k: usize) -> Self {
        Self(vec![k])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|b| = b_1 + ... + b_d`.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Coordinate differentiated once, when `|b| == 1`.
    fn single_axis(&self) -> Option<usize> {
        if self.total() == 1 {
            self.0.iter().position(|&b| b == 1)
        } else {
            None
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(":"))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let orders = s
            .split(':')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad derivative order `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(orders))
    }
}

/// A configured kernel.
///
/// The textual form is `sobolev2`, `matern:<nu>`, `rbf:<lengthscale>`,
/// `spectral:alpha=<a>,terms=<N>` or `product:<spec>,<spec>,...` with one
/// one-dimensional factor per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec<T> {
    Sobolev2,
    Matern(Matern<T>),
    Rbf(Rbf<T>),
    Spectral(SpectralKernel<T>),
    Product(Vec<KernelSpec<T>>),
}

impl<T: Scalar> KernelSpec<T> {
    pub fn matern(nu: T) -> Result<Self> {
        Matern::new(nu).map(Self::Matern)
    }

    pub fn rbf(lengthscale: T) -> Result<Self> {
        Rbf::new(lengthscale).map(Self::Rbf)
    }

    pub fn spectral(alpha: T, terms: usize) -> Result<Self> {
        SpectralKernel::new(alpha, terms).map(Self::Spectral)
    }

    pub fn product(factors: Vec<KernelSpec<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("product kernel needs at least one factor".into()));
        }
        if factors.iter().any(|f| matches!(f, KernelSpec::Product(_))) {
            return Err(Error::InvalidParameter("product factors must be one-dimensional".into()));
        }
        Ok(Self::Product(factors))
    }

    /// Input dimension when fixed by the kernel; `None` for isotropic kernels
    /// that accept any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Sobolev2 | Self::Spectral(_) => Some(1),
            Self::Matern(_) | Self::Rbf(_) => None,
            Self::Product(f) => Some(f.len()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sobolev2 => "sobolev2",
            Self::Matern(_) => "matern",
            Self::Rbf(_) => "rbf",
            Self::Spectral(_) => "spectral",
            Self::Product(_) => "product",
        }
    }

    /// Largest total order `|b|` available for `partial(b, 0, ..)` in
    /// dimension `dim`; `None` when unbounded.
    pub fn max_derivative_order(&self, dim: usize) -> Option<usize> {
        match self {
            Self::Sobolev2 => Some(Sobolev2::MAX_ORDER),
            Self::Matern(m) => Some(if dim <= 1 { m.max_order() } else { m.max_order().min(1) }),
            Self::Rbf(_) => None,
            Self::Spectral(s) => Some(s.max_order().unwrap_or(0)),
            Self::Product(f) => {
                // Orders add across coordinates.
                let mut total = 0;
                for k in f {
                    total += k.max_derivative_order(1)?;
                }
                Some(total)
            }
        }
    }

    /// Whether the mixed partial `d^a_x d^b_y K` is offered.
    pub fn offers(&self, a: &MultiIndex, b: &MultiIndex) -> bool {
        if a.dim() != b.dim() {
            return false;
        }
        let d = a.dim();
        match self {
            Self::Sobolev2 => d == 1 && Sobolev2::offers(a.0[0], b.0[0]),
            Self::Spectral(s) => d == 1 && s.offers(a.0[0], b.0[0]),
            Self::Rbf(_) => true,
            Self::Matern(m) => {
                let total = a.total() + b.total();
                if total == 0 {
                    return true;
                }
                if d == 1 {
                    m.offers_total(total)
                } else {
                    a.total() <= 1 && b.total() <= 1 && m.offers_total(total)
                }
            }
            Self::Product(f) => {
                d == f.len()
                    && f.iter()
                        .enumerate()
                        .all(|(i, k)| k.offers(&MultiIndex::scalar(a.0[i]), &MultiIndex::scalar(b.0[i])))
            }
        }
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::DimensionMismatch { context: "kernel input", expected: d, found: x.len() });
            }
        }
        if x.is_empty() {
            return Err(Error::DimensionMismatch { context: "kernel input", expected: 1, found: 0 });
        }
        for &v in x {
            if !v.is_finite() {
                return Err(Error::DomainViolation { value: v.as_f64(), domain: "finite reals" });
            }
        }
        match self {
            Self::Sobolev2 => check_unit(x[0]),
            Self::Product(f) => {
                for (k, &v) in f.iter().zip(x) {
                    if matches!(k, Self::Sobolev2) {
                        check_unit(v)?;
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Validates a pair of inputs and a derivative request against this kernel.
    pub fn check_request(&self, a: &MultiIndex, b: &MultiIndex, x: &[T], y: &[T]) -> Result<()> {
        self.check_point(x)?;
        self.check_point(y)?;
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { context: "kernel input", expected: x.len(), found: y.len() });
        }
        for idx in [a, b] {
            if idx.dim() != x.len() {
                return Err(Error::DimensionMismatch {
                    context: "derivative multi-index",
                    expected: x.len(),
                    found: idx.dim(),
                });
            }
        }
        if !self.offers(a, b) {
            return Err(Error::UnsupportedDerivativeOrder {
                a: a.0.clone(),
                b: b.0.clone(),
                kernel: self.to_string(),
            });
        }
        Ok(())
    }

    /// `K(x, y)`.
    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        let z = MultiIndex::zeros(x.len());
        self.check_request(&z, &z, x, y)?;
        Ok(self.eval_unchecked(x, y))
    }

    /// `d^a_x d^b_y K(x, y)`.
    pub fn partial(&self, a: &MultiIndex, b: &MultiIndex, x: &[T], y: &[T]) -> Result<T> {
        self.check_request(a, b, x, y)?;
        Ok(self.partial_unchecked(a.as_slice(), b.as_slice(), x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T], y: &[T]) -> T {
        match self {
            Self::Sobolev2 => Sobolev2::eval(x[0], y[0]),
            Self::Matern(m) => m.eval_distance(distance(x, y)),
            Self::Rbf(r) => {
                let mut acc = T::one();
                for (&xi, &yi) in x.iter().zip(y) {
                    acc *= r.lag_derivative(0, xi - yi);
                }
                acc
            }
            Self::Spectral(s) => s.eval(x[0], y[0]),
            Self::Product(f) => {
                let mut acc = T::one();
                for (i, k) in f.iter().enumerate() {
                    acc *= k.eval_unchecked(&x[i..=i], &y[i..=i]);
                }
                acc
            }
        }
    }

    /// Assumes the request was validated by `check_request`.
    pub(crate) fn partial_unchecked(&self, a: &[usize], b: &[usize], x: &[T], y: &[T]) -> T {
        match self {
            Self::Sobolev2 => Sobolev2::partial(a[0], b[0], x[0], y[0]).unwrap_or(T::nan()),
            Self::Matern(m) => {
                if x.len() == 1 {
                    let v = m.lag_derivative(a[0] + b[0], x[0] - y[0]);
                    if b[0] % 2 == 1 {
                        -v
                    } else {
                        v
                    }
                } else {
                    let ia = MultiIndex(a.to_vec()).single_axis();
                    let ib = MultiIndex(b.to_vec()).single_axis();
                    m.first_order_partial(ia, ib, x, y)
                }
            }
            Self::Rbf(r) => {
                let mut acc = T::one();
                for i in 0..x.len() {
                    acc *= r.factor_partial(a[i], b[i], x[i], y[i]);
                }
                acc
            }
            Self::Spectral(s) => s.partial(a[0], b[0], x[0], y[0]),
            Self::Product(f) => {
                let mut acc = T::one();
                for (i, k) in f.iter().enumerate() {
                    acc *= k.partial_unchecked(&a[i..=i], &b[i..=i], &x[i..=i], &y[i..=i]);
                }
                acc
            }
        }
    }

    fn check_design(&self, design: &Matrix<T>) -> Result<()> {
        if design.rows() == 0 {
            return Err(Error::DimensionMismatch { context: "design rows", expected: 1, found: 0 });
        }
        for i in 0..design.rows() {
            self.check_point(design.row(i))?;
        }
        Ok(())
    }

    /// Gram matrix `K(X, X)`, exactly symmetric.
    pub fn gram(&self, design: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_design(design)?;
        if let Self::Spectral(s) = self {
            return Ok(s.gram(&design.column_values(0)));
        }
        let n = design.rows();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(design.row(i), design.row(j));
                g.row_mut(i)[j] = v;
                g.row_mut(j)[i] = v;
            }
        }
        Ok(g)
    }

    /// Cross-covariance block `d^a_x d^b_y K(x_i, y_j)`.
    pub fn cross_partial(
        &self,
        a: &MultiIndex,
        b: &MultiIndex,
        xs: &Matrix<T>,
        ys: &Matrix<T>,
    ) -> Result<Matrix<T>> {
        self.check_design(xs)?;
        self.check_design(ys)?;
        self.check_request(a, b, xs.row(0), ys.row(0))?;
        Ok(Matrix::from_fn(xs.rows(), ys.rows(), |i, j| {
            self.partial_unchecked(a.as_slice(), b.as_slice(), xs.row(i), ys.row(j))
        }))
    }

    /// Row vector `d^beta_x K(x0, X_j)`, `j = 1..n`.
    pub fn cross_partial_row(&self, beta: &MultiIndex, x0: &[T], design: &Matrix<T>) -> Result<Vec<T>> {
        self.check_design(design)?;
        let zero = MultiIndex::zeros(beta.dim());
        self.check_request(beta, &zero, x0, design.row(0))?;
        if let Self::Spectral(s) = self {
            let n = s.terms();
            let fx = crate::spectral::basis::features(x0[0], beta.0[0], n);
            let weighted: Vec<T> = fx.iter().zip(s.eigenvalues()).map(|(&f, &m)| f * m).collect();
            let mut buf = Vec::with_capacity(n);
            return Ok((0..design.rows())
                .map(|j| {
                    crate::spectral::basis::features_into(design.row(j)[0], 0, n, &mut buf);
                    crate::linalg::dot(&weighted, &buf)
                })
                .collect());
        }
        Ok((0..design.rows())
            .map(|j| self.partial_unchecked(beta.as_slice(), zero.as_slice(), x0, design.row(j)))
            .collect())
    }
}

fn check_unit<T: Scalar>(v: T) -> Result<()> {
    if v < T::zero() || v > T::one() {
        Err(Error::DomainViolation { value: v.as_f64(), domain: "[0, 1]" })
    } else {
        Ok(())
    }
}

fn distance<T: Scalar>(x: &[T], y: &[T]) -> T {
    if x.len() == 1 {
        return (x[0] - y[0]).abs();
    }
    let mut r2 = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let d = a - b;
        r2 += d * d;
    }
    r2.sqrt()
}

impl<T: Scalar> fmt::Display for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sobolev2 => f.write_str("sobolev2"),
            Self::Matern(m) => write!(f, "matern:{}", m.nu()),
            Self::Rbf(r) => write!(f, "rbf:{}", r.lengthscale()),
            Self::Spectral(s) => write!(f, "spectral:alpha={},terms={}", s.alpha(), s.terms()),
            Self::Product(factors) => {
                f.write_str("product:")?;
                for (i, k) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_number<T: Scalar>(text: &str, what: &str) -> Result<T> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} `{text}`")))?;
    Ok(T::lit(v))
}

fn parse_spectral<T: Scalar>(args: &str) -> Result<KernelSpec<T>> {
    let mut alpha = None;
    let mut terms = None;
    for kv in args.split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value in `{kv}`")))?;
        match k.trim() {
            "alpha" => alpha = Some(parse_number::<T>(v, "alpha")?),
            "terms" => {
                terms = Some(
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad terms `{v}`")))?,
                )
            }
            other => return Err(Error::Parse(format!("unknown spectral parameter `{other}`"))),
        }
    }
    let alpha = alpha.ok_or_else(|| Error::Parse("spectral kernel needs alpha".into()))?;
    let terms = terms.ok_or_else(|| Error::Parse("spectral kernel needs terms".into()))?;
    KernelSpec::spectral(alpha, terms)
}

impl<T: Scalar> FromStr for KernelSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("sobolev2", None) => Ok(Self::Sobolev2),
            ("matern", Some(r)) => Self::matern(parse_number(r, "nu")?),
            ("rbf", Some(r)) => Self::rbf(parse_number(r, "lengthscale")?),
            ("spectral", Some(r)) => parse_spectral(r),
            ("product", Some(r)) => {
                // Factor parameters of the form key=value belong to the
                // preceding factor.
                let mut items: Vec<String> = Vec::new();
                for tok in r.split(',') {
                    let t = tok.trim();
                    if !t.contains(':') && t.contains('=') {
                        match items.last_mut() {
                            Some(prev) => {
                                prev.push(',');
                                prev.push_str(t);
                            }
                            None => return Err(Error::Parse(format!("dangling parameter `{t}`"))),
                        }
                    } else {
                        items.push(t.to_string());
                    }
                }
                let factors = items
                    .iter()
                    .map(|i| i.parse::<KernelSpec<T>>())
                    .collect::<Result<Vec<_>>>()?;
                Self::product(factors)
            }
            _ => Err(Error::Parse(format!("unknown kernel `{s}`"))),
        }
    }
}
