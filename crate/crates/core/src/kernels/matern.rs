use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::{gamma, reduced_bessel_fast, reduced_bessel_half_integer, reduced_bessel};

/// Isotropic Matérn kernel with unit lengthscale,
/// `K(r) = 2^{1-nu}/Gamma(nu) z^nu K_nu(z)` with `z = sqrt(2 nu) r` and
/// `K_nu` the modified Bessel function of the second kind.
///
/// Derivatives use the reduced Bessel function `G_mu(z) = z^mu K_mu(z)` and
/// the identity `(1/z d/dz) G_mu = -G_{mu-1}`, so that every derivative of
/// `K` is a finite combination of `G_{nu-j}` with no differencing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matern<T> {
    nu: T,
    scale: T,
    norm: T,
}

impl<T: Scalar> Matern<T> {
    pub fn new(nu: T) -> Result<Self> {
        if !(nu > T::zero()) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("Matérn nu must be positive, got {nu}")));
        }
        let two = T::lit(2.0);
        Ok(Self {
            nu,
            scale: (two * nu).sqrt(),
            norm: two.powf(T::one() - nu) / gamma(nu),
        })
    }

    pub fn nu(&self) -> T {
        self.nu
    }

    /// Total derivative order `a + b` must stay below `2 nu`.
    pub fn offers_total(&self, total: usize) -> bool {
        T::from_usize_lossy(total) < T::lit(2.0) * self.nu
    }

    /// Largest single-argument order on offer.
    pub fn max_order(&self) -> usize {
        let two_nu = T::lit(2.0) * self.nu;
        let c = two_nu.ceil().to_usize().unwrap_or(1);
        c.saturating_sub(1)
    }

    #[inline]
    fn g(&self, mu: T, z: T) -> T {
        reduced_bessel_fast(mu, z)
    }

    /// Radial profile at scaled distance `z = sqrt(2 nu) r`.
    pub fn profile(&self, z: T) -> T {
        if z == T::zero() {
            T::one()
        } else {
            self.norm * self.g(self.nu, z)
        }
    }

    /// Same profile through the general Bessel algorithm, bypassing the
    /// half-integer closed form.
    pub fn profile_general(&self, z: T) -> T {
        if z == T::zero() {
            T::one()
        } else {
            self.norm * reduced_bessel(self.nu, z)
        }
    }

    /// Closed form for half-integer `nu`, `None` otherwise.
    pub fn profile_closed_form(&self, z: T) -> Option<T> {
        if z == T::zero() {
            return reduced_bessel_half_integer(self.nu, T::one()).map(|_| T::one());
        }
        reduced_bessel_half_integer(self.nu, z).map(|g| self.norm * g)
    }

    pub fn eval_distance(&self, r: T) -> T {
        self.profile(self.scale * r.abs())
    }

    /// `d^p/du^p K(|u|)` in one dimension, for `p < 2 nu`.
    pub fn lag_derivative(&self, p: usize, u: T) -> T {
        if p == 0 {
            return self.eval_distance(u);
        }
        let s = self.scale;
        let z = s * u.abs();
        let tiny = T::epsilon() * T::epsilon();
        if z <= tiny {
            return self.lag_derivative_at_zero(p);
        }
        let mut acc = T::zero();
        let j0 = p.div_ceil(2);
        for j in j0..=p {
            let coef = faa_coefficient::<T>(p, j);
            let gj = self.g(self.nu - T::from_usize_lossy(j), z);
            let term = coef * z.powi((2 * j - p) as i32) * gj;
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        let mut v = s.powi(p as i32) * self.norm * acc;
        if u < T::zero() && p % 2 == 1 {
            v = -v;
        }
        v
    }

    /// Analytic limit at zero lag: odd orders vanish, even orders equal
    /// `(-1)^{p/2} (p-1)!! nu^{p/2} Gamma(nu - p/2) / Gamma(nu)`.
    pub fn lag_derivative_at_zero(&self, p: usize) -> T {
        if p % 2 == 1 {
            return T::zero();
        }
        if p == 0 {
            return T::one();
        }
        let half = p / 2;
        let mut double_fact = T::one();
        let mut k = p as i64 - 1;
        while k > 1 {
            double_fact *= T::from_i64(k).unwrap();
            k -= 2;
        }
        let hp = T::from_usize_lossy(half);
        let v = double_fact * self.nu.powi(half as i32) * gamma(self.nu - hp) / gamma(self.nu);
        if half % 2 == 0 {
            v
        } else {
            -v
        }
    }

    /// First-order mixed partials of the isotropic kernel in `d` dimensions
    /// with `|a|, |b| <= 1`, given as the differentiated coordinate indices.
    pub fn first_order_partial(&self, ia: Option<usize>, ib: Option<usize>, x: &[T], y: &[T]) -> T {
        let s2 = self.scale * self.scale;
        let mut r2 = T::zero();
        for (&xi, &yi) in x.iter().zip(y) {
            let d = xi - yi;
            r2 += d * d;
        }
        let z = self.scale * r2.sqrt();
        let u = |i: usize| x[i] - y[i];
        let g1 = |s: &Self| {
            if z == T::zero() {
                // G_{nu-1}(0) when nu > 1; only needed for the diagonal term.
                crate::special::reduced_bessel_at_zero(s.nu - T::one()).unwrap_or(T::zero())
            } else {
                s.g(s.nu - T::one(), z)
            }
        };
        match (ia, ib) {
            (None, None) => self.profile(z),
            (Some(i), None) => {
                if z == T::zero() {
                    T::zero()
                } else {
                    -s2 * u(i) * self.norm * g1(self)
                }
            }
            (None, Some(j)) => {
                if z == T::zero() {
                    T::zero()
                } else {
                    s2 * u(j) * self.norm * g1(self)
                }
            }
            (Some(i), Some(j)) => {
                let diag = if i == j { s2 * self.norm * g1(self) } else { T::zero() };
                let cross = if z == T::zero() {
                    T::zero()
                } else {
                    s2 * s2 * u(i) * u(j) * self.norm * self.g(self.nu - T::lit(2.0), z)
                };
                diag - cross
            }
        }
    }
}

/// `p! / ((p-j)! (2j-p)! 2^{p-j})`, the coefficient of `z^{2j-p} f^{(j)}`
/// in `d^p/dz^p f(z^2/2)`.
fn faa_coefficient<T: Scalar>(p: usize, j: usize) -> T {
    let fact = |n: usize| (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k));
    fact(p) / (fact(p - j) * fact(2 * j - p) * T::lit(2.0).powi((p - j) as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_nu() {
        assert!(Matern::new(0.0_f64).is_err());
        assert!(Matern::new(-1.5_f64).is_err());
        assert!(Matern::new(f64::NAN).is_err());
    }

    #[test]
    fn exponential_case() {
        let k = Matern::new(0.5_f64).unwrap();
        assert!((k.eval_distance(1.0) - (-1.0_f64).exp()).abs() < 1e-15);
        assert!((k.profile_general(1.0) - (-1.0_f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn known_half_integer_forms() {
        for r in [0.01, 0.3, 1.0, 2.7] {
            let z32 = 3.0_f64.sqrt() * r;
            let want32 = (1.0 + z32) * (-z32).exp();
            let z52 = 5.0_f64.sqrt() * r;
            let want52 = (1.0 + z52 + z52 * z52 / 3.0) * (-z52).exp();
            let z72 = 7.0_f64.sqrt() * r;
            let want72 =
                (1.0 + z72 + 0.4 * z72 * z72 + z72.powi(3) / 15.0) * (-z72).exp();
            assert!((Matern::new(1.5).unwrap().eval_distance(r) - want32).abs() < 1e-14);
            assert!((Matern::new(2.5).unwrap().eval_distance(r) - want52).abs() < 1e-14);
            assert!((Matern::new(3.5).unwrap().eval_distance(r) - want72).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_lag_second_derivative() {
        // Matérn 5/2: k''(0) = -5/3.
        let k = Matern::new(2.5_f64).unwrap();
        assert!((k.lag_derivative_at_zero(2) + 5.0 / 3.0).abs() < 1e-14);
        // Matérn 3/2: k''(0) = -3.
        let k = Matern::new(1.5_f64).unwrap();
        assert!((k.lag_derivative_at_zero(2) + 3.0).abs() < 1e-13);
    }

    #[test]
    fn lag_derivative_approaches_zero_lag_limit() {
        for nu in [2.5_f64, 3.5, 3.2] {
            let k = Matern::new(nu).unwrap();
            for p in [1usize, 2, 3, 4] {
                if !k.offers_total(p) {
                    continue;
                }
                let lim = k.lag_derivative_at_zero(p);
                let near = k.lag_derivative(p, 1e-7);
                assert!((near - lim).abs() < 1e-5 * (1.0 + lim.abs()), "nu={nu} p={p}");
            }
        }
    }

    #[test]
    fn isotropic_first_order_matches_one_dimensional() {
        let k = Matern::new(2.5_f64).unwrap();
        let (x, y) = (0.3, 0.75);
        let d1 = k.first_order_partial(Some(0), None, &[x], &[y]);
        assert!((d1 - k.lag_derivative(1, x - y)).abs() < 1e-13);
        let d11 = k.first_order_partial(Some(0), Some(0), &[x], &[y]);
        assert!((d11 + k.lag_derivative(2, x - y)).abs() < 1e-13);
        let diag = k.first_order_partial(Some(0), Some(0), &[x], &[x]);
        assert!((diag - 5.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn max_order_follows_two_nu() {
        assert_eq!(Matern::new(0.5_f64).unwrap().max_order(), 0);
        assert_eq!(Matern::new(1.5_f64).unwrap().max_order(), 2);
        assert_eq!(Matern::new(2.5_f64).unwrap().max_order(), 4);
        assert_eq!(Matern::new(2.0_f64).unwrap().max_order(), 3);
    }
}
