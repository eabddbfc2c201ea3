#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fornberg weights for the `order`-th derivative at 0 on the nodes
/// `-half..=half` (unit spacing).
pub fn central_weights(order: usize, half: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (-(half as i64)..=half as i64).map(|v| v as f64).collect();
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[order]).collect()
}

/// Nested central differences of `f(x, y)`: order `a` along `x`, order `b`
/// along `y` with step `h`.
pub fn nested_fd(f: impl Fn(f64, f64) -> f64, a: usize, b: usize, x: f64, y: f64, h: f64, half: usize) -> f64 {
    let wa = central_weights(a, half);
    let wb = central_weights(b, half);
    let mut s = 0.0;
    for (i, &u) in wa.iter().enumerate() {
        if u == 0.0 {
            continue;
        }
        let xi = x + (i as f64 - half as f64) * h;
        for (j, &v) in wb.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let yj = y + (j as f64 - half as f64) * h;
            s += u * v * f(xi, yj);
        }
    }
    s / h.powi((a + b) as i32)
}

/// Central differences of a one-dimensional function.
pub fn fd(f: impl Fn(f64) -> f64, order: usize, x: f64, h: f64, half: usize) -> f64 {
    nested_fd(|u, _| f(u), order, 0, x, 0.0, h, half)
}

/// `m`-th derivative of the 1-based trigonometric basis function `i` on [0, 1].
pub fn psi(i: usize, m: usize, x: f64) -> f64 {
    if i == 1 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let w = 2.0 * std::f64::consts::PI * (i / 2) as f64;
    // d^m cos(wx) = w^m cos(wx + m pi/2), same shift for sin.
    let phase = w * x + m as f64 * std::f64::consts::FRAC_PI_2;
    let v = if i % 2 == 0 { phase.cos() } else { phase.sin() };
    std::f64::consts::SQRT_2 * w.powi(m as i32) * v
}

/// Ordinary least squares slope.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (count - 1) as f64).exp()).collect()
}
