//! Special functions needed by the Matérn family: the gamma function and the
//! modified Bessel function of the second kind `K_nu` for real order.
//!
//! `K_nu(x)` is computed with Temme's series for `x < 2` and Steed's
//! continued fraction (CF2) for `x >= 2`, both at a reduced order
//! `|mu| <= 1/2`, followed by the stable upward recurrence
//! `K_{mu+1} = K_{mu-1} + (2 mu / x) K_mu`.

use crate::scalar::Scalar;

const MAX_ITER: usize = 10_000;

/// Lanczos coefficients (g = 7, n = 9).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (reflection below 1/2).
pub fn gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    let z = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (z + T::from_usize_lossy(i));
    }
    let t = z + T::lit(LANCZOS_G) + half;
    (T::lit(2.0) * T::PI()).sqrt() * t.powf(z + half) * (-t).exp() * acc
}

const GAM1_CHEB: [f64; 7] = [
    -1.142_022_680_371_168e0,
    6.516_511_267_073_7e-3,
    3.087_090_173_086e-4,
    -3.470_626_964_9e-6,
    6.943_766_4e-9,
    3.677_95e-11,
    -1.356e-13,
];

const GAM2_CHEB: [f64; 8] = [
    1.843_740_587_300_905e0,
    -7.685_284_084_478_67e-2,
    1.271_927_136_654_6e-3,
    -4.971_736_704_2e-6,
    -3.312_611_98e-8,
    2.423_096e-10,
    -1.702e-13,
    -1.49e-15,
];

fn chebyshev<T: Scalar>(coeffs: &[f64], y: T) -> T {
    let y2 = y + y;
    let mut d = T::zero();
    let mut dd = T::zero();
    for &c in coeffs.iter().skip(1).rev() {
        let sv = d;
        d = y2 * d - dd + T::lit(c);
        dd = sv;
    }
    y * d - dd + T::lit(0.5 * coeffs[0])
}

/// Temme's auxiliary functions for `|mu| <= 1/2`:
/// `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))`.
pub(crate) fn temme_gammas<T: Scalar>(mu: T) -> (T, T, T, T) {
    let y = T::lit(8.0) * mu * mu - T::one();
    let gam1 = chebyshev(&GAM1_CHEB, y);
    let gam2 = chebyshev(&GAM2_CHEB, y);
    (gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1)
}

/// Returns `(K_nu(x), K_{nu+1}(x))` for `nu >= 0`, `x > 0`.
pub fn bessel_k<T: Scalar>(nu: T, x: T) -> (T, T) {
    debug_assert!(nu >= T::zero() && x > T::zero());
    let eps = T::epsilon();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let nl = (nu + half).floor();
    let mu = nu - nl;
    let mu2 = mu * mu;
    let xi = x.recip();
    let xi2 = two * xi;

    let (mut k_mu, mut k_mu1) = if x < two {
        let x2 = half * x;
        let pimu = T::PI() * mu;
        let fact = if pimu.abs() < eps { T::one() } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < eps { T::one() } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = half * ee / gampl;
        let mut q = half / (ee * gammi);
        let mut c = T::one();
        let dsq = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_ITER {
            let fi = T::from_usize_lossy(i);
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dsq / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * eps {
                break;
            }
        }
        (sum, sum1 * xi2)
    } else {
        // Steed's algorithm for CF2.
        let mut b = two * (T::one() + x);
        let mut d = b.recip();
        let mut delh = d;
        let mut h = d;
        let mut q1 = T::zero();
        let mut q2 = T::one();
        let a1 = T::lit(0.25) - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = T::one() + q * delh;
        for i in 2..MAX_ITER {
            let fi = T::from_usize_lossy(i);
            a -= two * (fi - T::one());
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += two;
            d = (b + a * d).recip();
            delh = (b * d - T::one()) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < eps {
                break;
            }
        }
        h = a1 * h;
        let k = (T::PI() / (two * x)).sqrt() * (-x).exp() / s;
        (k, k * (mu + x + half - h) * xi)
    };

    let steps = nl.to_usize().unwrap_or(0);
    for i in 1..=steps {
        let next = (mu + T::from_usize_lossy(i)) * xi2 * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    (k_mu, k_mu1)
}

/// Reduced Bessel function `G_mu(z) = z^mu K_{|mu|}(z)` for `z > 0`, any
/// real order, evaluated through the general algorithm.
pub fn reduced_bessel<T: Scalar>(mu: T, z: T) -> T {
    let (k, _) = bessel_k(mu.abs(), z);
    if k == T::zero() {
        return T::zero();
    }
    z.powf(mu) * k
}

/// Returns `Some(n)` when `mu = ±(n + 1/2)` exactly.
pub(crate) fn half_integer_index<T: Scalar>(mu: T) -> Option<usize> {
    let shifted = mu.abs() - T::lit(0.5);
    if shifted >= T::zero() && shifted.fract() == T::zero() {
        shifted.to_usize()
    } else {
        None
    }
}

/// Closed form of `G_mu(z)` for half-integer orders `mu = ±(n + 1/2)`:
/// `G_{n+1/2}(z) = sqrt(pi/2) e^{-z} sum_i (n+i)!/(i!(n-i)!) 2^{-i} z^{n-i}`
/// and `G_{-(n+1/2)}(z) = z^{-2n-1} G_{n+1/2}(z)`.
pub fn reduced_bessel_half_integer<T: Scalar>(mu: T, z: T) -> Option<T> {
    let n = half_integer_index(mu)?;
    // Horner in z over coefficients a_i z^{n-i}, a_i = (n+i)!/(i!(n-i)!) / 2^i.
    let mut coeff = T::one(); // a_0 = n!/n! = 1
    let mut poly = T::zero();
    let mut coeffs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        if i > 0 {
            let fi = T::from_usize_lossy(i);
            // a_i / a_{i-1} = (n+i)(n-i+1) / (2 i)
            coeff = coeff * T::from_usize_lossy(n + i) * T::from_usize_lossy(n - i + 1)
                / (T::lit(2.0) * fi);
        }
        coeffs.push(coeff);
    }
    for c in coeffs {
        poly = poly * z + c;
    }
    let g_pos = (T::FRAC_PI_2()).sqrt() * (-z).exp() * poly;
    if mu > T::zero() {
        Some(g_pos)
    } else {
        Some(g_pos * z.powi(-(2 * n as i32 + 1)))
    }
}

/// `G_mu(0) = 2^{mu-1} Gamma(mu)` for `mu > 0`; `None` otherwise (divergent
/// or logarithmic).
pub fn reduced_bessel_at_zero<T: Scalar>(mu: T) -> Option<T> {
    if mu > T::zero() {
        Some(T::lit(2.0).powf(mu - T::one()) * gamma(mu))
    } else {
        None
    }
}

/// `G_mu(z)` dispatching to the exact half-integer form when available.
pub(crate) fn reduced_bessel_fast<T: Scalar>(mu: T, z: T) -> T {
    reduced_bessel_half_integer(mu, z).unwrap_or_else(|| reduced_bessel(mu, z))
}
