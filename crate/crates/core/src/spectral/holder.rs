use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::basis;
use crate::spectral::SpectralKernel;

/// Function given by its coefficients in the trigonometric basis,
/// `f = sum_i f_i psi_i`, with declared Hölder smoothness `alpha`
/// (`sum_i i^alpha |f_i| < inf`).
#[derive(Debug, Clone, PartialEq)]
pub struct HolderFunction<T> {
    coefficients: Vec<T>,
    alpha: T,
}

impl<T: Scalar> HolderFunction<T> {
    pub fn new(coefficients: Vec<T>, alpha: T) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter("a series needs at least one coefficient".into()));
        }
        if !(alpha > T::zero()) {
            return Err(Error::InvalidParameter(format!("smoothness must be positive, got {alpha}")));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(Self { coefficients, alpha })
    }

    /// `f_i = A i^{-alpha - 1.01} (-1)^{i+1}` for `i <= terms`, with `A`
    /// chosen so that the sup norm over `grid` points is one.
    pub fn standard(alpha: T, terms: usize, grid: usize) -> Result<Self> {
        let decay = alpha + T::lit(1.01);
        let raw: Vec<T> = (1..=terms)
            .map(|i| {
                let v = T::from_usize_lossy(i).powf(-decay);
                if i % 2 == 1 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let f = Self::new(raw, alpha)?;
        let sup = f.sup_norm(0, grid.max(2));
        let scale = T::one() / sup;
        Ok(Self { coefficients: f.coefficients.iter().map(|&c| c * scale).collect(), alpha })
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn alpha_smoothness(&self) -> T {
        self.alpha
    }

    pub fn terms(&self) -> usize {
        self.coefficients.len()
    }

    /// `sum_i i^alpha |f_i|`.
    pub fn holder_norm(&self) -> T {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| T::from_usize_lossy(i + 1).powf(self.alpha) * c.abs())
            .sum()
    }

    /// Largest derivative order available term-wise: `floor(alpha)`.
    pub fn max_order(&self) -> usize {
        self.alpha.floor().to_usize().unwrap_or(0)
    }

    pub fn eval_deriv(&self, k: usize, x: T) -> T {
        series_value(&self.coefficients, k, x)
    }

    /// Sup of `|f^{(k)}|` over `grid` equispaced points of `[0, 1]`.
    pub fn sup_norm(&self, k: usize, grid: usize) -> T {
        series_sup(&self.coefficients, k, grid)
    }

    /// Coefficients of the proximate function `f_lambda`:
    /// `mu_i / (mu_i + lambda) f_i`.
    pub fn f_lambda(&self, kernel: &SpectralKernel<T>, lambda: T) -> Result<Self> {
        let c = f_lambda_expand(&self.coefficients, kernel, lambda)?;
        Ok(Self { coefficients: c, alpha: self.alpha })
    }
}

fn check_lengths<T: Scalar>(f: &[T], kernel: &SpectralKernel<T>) -> Result<()> {
    if f.len() > kernel.terms() {
        return Err(Error::DimensionMismatch {
            context: "series length vs kernel terms",
            expected: kernel.terms(),
            found: f.len(),
        });
    }
    Ok(())
}

/// `(mu_i / (mu_i + lambda)) f_i`.
pub fn f_lambda_expand<T: Scalar>(f: &[T], kernel: &SpectralKernel<T>, lambda: T) -> Result<Vec<T>> {
    check_lengths(f, kernel)?;
    if lambda < T::zero() {
        return Err(Error::InvalidParameter(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(f.iter()
        .zip(kernel.eigenvalues())
        .map(|(&c, &m)| m / (m + lambda) * c)
        .collect())
}

/// Coefficients of `f_lambda - f_0`: `-(lambda / (lambda + mu_i)) f_i`.
pub fn f_lambda_gap<T: Scalar>(f: &[T], kernel: &SpectralKernel<T>, lambda: T) -> Result<Vec<T>> {
    check_lengths(f, kernel)?;
    Ok(f.iter()
        .zip(kernel.eigenvalues())
        .map(|(&c, &m)| -(lambda / (lambda + m)) * c)
        .collect())
}

/// `sum_i c_i psi_i^{(m)}(x)`.
pub fn series_value<T: Scalar>(c: &[T], m: usize, x: T) -> T {
    let f = basis::features(x, m, c.len());
    crate::linalg::dot(c, &f)
}

/// `t / (grid - 1)`, `t = 0..grid`.
pub fn unit_grid<T: Scalar>(grid: usize) -> Vec<T> {
    if grid == 1 {
        return vec![T::zero()];
    }
    let d = T::from_usize_lossy(grid - 1);
    (0..grid).map(|t| T::from_usize_lossy(t) / d).collect()
}

/// Grid sup of `|sum_i c_i psi_i^{(m)}|`.
pub fn series_sup<T: Scalar>(c: &[T], m: usize, grid: usize) -> T {
    let mut buf = Vec::with_capacity(c.len());
    let mut best = T::zero();
    for x in unit_grid::<T>(grid) {
        basis::features_into(x, m, c.len(), &mut buf);
        best = best.max(crate::linalg::dot(c, &buf).abs());
    }
    best
}

/// Upper bound on how far the grid sup can fall below the true sup:
/// half the spacing times the Lipschitz constant `sum |c_i| sup |psi_i^{(m+1)}|`.
pub fn series_sup_grid_error<T: Scalar>(c: &[T], m: usize, grid: usize) -> T {
    let lip: T = c
        .iter()
        .enumerate()
        .map(|(i, &v)| v.abs() * basis::basis_sup::<T>(i + 1, m + 1))
        .sum();
    let h = T::one() / T::from_usize_lossy(grid.max(2) - 1);
    lip * h * T::lit(0.5)
}
