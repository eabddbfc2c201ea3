//! Dense row-major matrices and the shifted Cholesky factorization used to
//! apply `[K(X,X) + n lambda I]^{-1}`.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of jitter doublings attempted before giving up.
pub const JITTER_DOUBLINGS: usize = 10;
const JITTER_START: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Single-column matrix (an `n x 1` design for one-dimensional inputs).
    pub fn column(values: &[T]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    /// Copy of column `j`.
    pub fn column_values(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix rows",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn add_diagonal(&mut self, shift: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += shift;
        }
    }

    /// Copy of the submatrix keeping the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Lower Cholesky factor of `G + (shift + jitter_used) I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor<T> {
    lower: Matrix<T>,
    shift: T,
    jitter_used: T,
}

impl<T: Scalar> CholFactor<T> {
    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    /// Absolute diagonal shift applied on top of `shift`.
    pub fn jitter_used(&self) -> T {
        self.jitter_used
    }

    /// Solves `L z = b` in place.
    pub fn forward_solve(&self, b: &mut [T]) {
        let l = &self.lower;
        for i in 0..b.len() {
            let row = l.row(i);
            let s = b[i] - dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `L^T z = b` in place.
    pub fn backward_solve(&self, b: &mut [T]) {
        let l = &self.lower;
        let n = b.len();
        for i in (0..n).rev() {
            let bi = b[i] / l[(i, i)];
            b[i] = bi;
            let row = l.row(i);
            for j in 0..i {
                b[j] -= row[j] * bi;
            }
        }
    }

    /// `(G + shift I)^{-1} b` via the two triangular passes.
    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "cholesky solve",
                expected: self.dim(),
                found: b.len(),
            });
        }
        let mut z = b.to_vec();
        self.forward_solve(&mut z);
        self.backward_solve(&mut z);
        Ok(z)
    }

    /// `(G + shift I)^{-1} B` column by column.
    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        if b.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "cholesky solve",
                expected: self.dim(),
                found: b.rows(),
            });
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![T::zero(); b.rows()];
        for j in 0..b.cols() {
            for i in 0..b.rows() {
                col[i] = b[(i, j)];
            }
            self.forward_solve(&mut col);
            self.backward_solve(&mut col);
            for i in 0..b.rows() {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }

    /// `log det (G + shift I) = 2 sum log L_ii`.
    pub fn logdet(&self) -> T {
        let two = T::lit(2.0);
        (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<T>() * two
    }

    /// Diagonal of `(G + shift I)^{-1}`, from the columns of `L^{-1}`.
    pub fn inverse_diagonal(&self) -> Vec<T> {
        let n = self.dim();
        let mut diag = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            // Column j of L^{-1} is zero above j.
            let l = &self.lower;
            for i in j..n {
                let row = l.row(i);
                let s = e[i] - dot(&row[j..i], &e[j..i]);
                e[i] = s / row[i];
            }
            diag[j] = e[j..].iter().map(|&v| v * v).sum();
        }
        diag
    }
}

fn try_cholesky<T: Scalar>(g: &Matrix<T>, diag_shift: T) -> Option<Matrix<T>> {
    let n = g.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = {
                let (ri, rj) = (l.row(i), l.row(j));
                dot(&ri[..j], &rj[..j])
            };
            if i == j {
                let d = g[(i, i)] + diag_shift - s;
                if !(d > T::zero()) || !d.is_finite() {
                    return None;
                }
                l[(i, i)] = d.sqrt();
            } else {
                let v = (g[(i, j)] - s) / l[(j, j)];
                l[(i, j)] = v;
            }
        }
    }
    Some(l)
}

/// Factorizes `G + shift I`, escalating a diagonal jitter from
/// `1e-12 * trace(G)/n` over at most ten doublings when round-off makes the
/// shifted matrix numerically indefinite.
pub fn chol_shifted<T: Scalar>(g: &Matrix<T>, shift: T) -> Result<CholFactor<T>> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "cholesky (square matrix)",
            expected: n,
            found: g.cols(),
        });
    }
    if !(shift >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "diagonal shift must be non-negative, got {shift}"
        )));
    }
    if let Some(lower) = try_cholesky(g, shift) {
        return Ok(CholFactor { lower, shift, jitter_used: T::zero() });
    }
    let mean_diag = if n > 0 { g.trace() / T::from_usize_lossy(n) } else { T::zero() };
    let base = if mean_diag > T::zero() { mean_diag } else { shift.max(T::one()) };
    let mut jitter = T::lit(JITTER_START) * base;
    for _ in 0..=JITTER_DOUBLINGS {
        if let Some(lower) = try_cholesky(g, shift + jitter) {
            return Ok(CholFactor { lower, shift, jitter_used: jitter });
        }
        jitter = jitter * T::lit(2.0);
    }
    Err(Error::FactorizationFailed { jitter: (jitter / T::lit(2.0)).as_f64() })
}

/// Free-function form of [`CholFactor::solve`].
pub fn solve<T: Scalar>(factor: &CholFactor<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    factor.solve(b)
}

/// Free-function form of [`CholFactor::logdet`].
pub fn logdet<T: Scalar>(factor: &CholFactor<T>) -> T {
    factor.logdet()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_with_shift_four() {
        let g = Matrix::<f64>::zeros(2, 2);
        let f = chol_shifted(&g, 4.0).unwrap();
        assert_eq!(f.lower(), &Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap());
        assert_eq!(f.jitter_used(), 0.0);
        assert!((f.logdet() - 16.0_f64.ln()).abs() < 1e-15);
        let two_i = chol_shifted(&Matrix::<f64>::identity(2), 1.0).unwrap();
        assert!((two_i.logdet() - 4.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn identity_with_shift_three() {
        let f = chol_shifted(&Matrix::<f64>::identity(2), 3.0).unwrap();
        assert_eq!(f.lower(), &Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap());
        let inv = f.solve(&Matrix::identity(2)).unwrap();
        assert_eq!(inv, Matrix::from_rows(&[vec![0.25, 0.0], vec![0.0, 0.25]]).unwrap());
    }

    #[test]
    fn solve_zero_rhs_and_half_identity() {
        let f = chol_shifted(&Matrix::<f64>::zeros(3, 3), 4.0).unwrap();
        let z = f.solve(&Matrix::zeros(3, 2)).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
        let half = f.solve(&Matrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(half[(i, j)], if i == j { 0.25 } else { 0.0 });
            }
        }
        // Factor of 2 I: lower = sqrt(2) I; identity shifted by 1 gives 2 I.
        let f2 = chol_shifted(&Matrix::<f64>::identity(3), 1.0).unwrap();
        let h = f2.solve(&Matrix::identity(3)).unwrap();
        assert!((h[(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn logdet_identity_is_zero() {
        let f = chol_shifted(&Matrix::<f64>::zeros(4, 4), 1.0).unwrap();
        assert_eq!(f.logdet(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = chol_shifted(&Matrix::<f64>::identity(3), 1.0).unwrap();
        assert!(matches!(f.solve_vec(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(chol_shifted(&Matrix::<f64>::zeros(2, 3), 1.0).is_err());
    }

    #[test]
    fn indefinite_matrix_fails_after_jitter() {
        let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(matches!(chol_shifted(&g, 0.5), Err(Error::FactorizationFailed { .. })));
    }

    #[test]
    fn jitter_rescues_roundoff_indefiniteness() {
        // Rank-one matrix with no shift: exactly singular.
        let v = [1.0, 2.0, 3.0];
        let g = Matrix::from_fn(3, 3, |i, j| v[i] * v[j]);
        let f = chol_shifted(&g, 0.0).unwrap();
        assert!(f.jitter_used() > 0.0);
    }

    #[test]
    fn inverse_diagonal_matches_full_inverse() {
        let g = Matrix::from_rows(&[
            vec![4.0_f64, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let f = chol_shifted(&g, 0.1).unwrap();
        let inv = f.solve(&Matrix::identity(3)).unwrap();
        for (i, d) in f.inverse_diagonal().into_iter().enumerate() {
            assert!((d - inv[(i, i)]).abs() < 1e-14);
        }
    }

    #[test]
    fn single_precision_factorization() {
        let f = chol_shifted(&Matrix::<f32>::identity(2), 3.0).unwrap();
        assert_eq!(f.lower()[(0, 0)], 2.0_f32);
    }
}
