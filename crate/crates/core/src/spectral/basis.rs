//! Trigonometric basis on `[0, 1]`: `psi_1 = 1`,
//! `psi_{2j} = sqrt(2) cos(2 pi j x)`, `psi_{2j+1} = sqrt(2) sin(2 pi j x)`.
//! Indices are 1-based throughout.

use crate::scalar::Scalar;

/// Frequency `j` of basis index `i` (0 for the constant).
pub fn frequency(i: usize) -> usize {
    i / 2
}

fn omega<T: Scalar>(j: usize) -> T {
    T::lit(2.0) * T::PI() * T::from_usize_lossy(j)
}

/// `d^m/dx^m cos` and `sin` expressed through the undifferentiated values.
#[inline]
fn rotate<T: Scalar>(m: usize, c: T, s: T) -> (T, T) {
    match m % 4 {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

/// `psi_i^{(m)}(x)`.
pub fn basis<T: Scalar>(i: usize, m: usize, x: T) -> T {
    assert!(i >= 1, "basis indices start at 1");
    if i == 1 {
        return if m == 0 { T::one() } else { T::zero() };
    }
    let j = frequency(i);
    let w: T = omega(j);
    let (c, s) = rotate(m, (w * x).cos(), (w * x).sin());
    let amp = T::SQRT_2() * w.powi(m as i32);
    if i % 2 == 0 {
        amp * c
    } else {
        amp * s
    }
}

/// `sup_x |psi_i^{(m)}(x)|`.
pub fn basis_sup<T: Scalar>(i: usize, m: usize) -> T {
    assert!(i >= 1, "basis indices start at 1");
    if i == 1 {
        return if m == 0 { T::one() } else { T::zero() };
    }
    T::SQRT_2() * omega::<T>(frequency(i)).powi(m as i32)
}

/// Values `psi_1^{(m)}(x), ..., psi_n^{(m)}(x)`.
pub fn features<T: Scalar>(x: T, m: usize, n_terms: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n_terms);
    features_into(x, m, n_terms, &mut out);
    out
}

/// Fills `out` with the first `n_terms` derivative features at `x`. Uses the
/// angle-addition recurrence, reseeded exactly every 32 frequencies so the
/// accumulated rounding stays at a few ulps.
pub fn features_into<T: Scalar>(x: T, m: usize, n_terms: usize, out: &mut Vec<T>) {
    out.clear();
    if n_terms == 0 {
        return;
    }
    out.push(if m == 0 { T::one() } else { T::zero() });
    let jmax = n_terms / 2;
    let two_pi_x = T::lit(2.0) * T::PI() * x;
    let (s1, c1) = two_pi_x.sin_cos();
    let (mut c, mut s) = (T::one(), T::zero());
    let sqrt2 = T::SQRT_2();
    for j in 1..=jmax {
        if j % 32 == 1 {
            let (sj, cj) = (two_pi_x * T::from_usize_lossy(j)).sin_cos();
            c = cj;
            s = sj;
        } else {
            let cn = c * c1 - s * s1;
            let sn = s * c1 + c * s1;
            c = cn;
            s = sn;
        }
        let (dc, ds) = rotate(m, c, s);
        let amp = sqrt2 * omega::<T>(j).powi(m as i32);
        out.push(amp * dc);
        if out.len() < n_terms {
            out.push(amp * ds);
        }
    }
}
