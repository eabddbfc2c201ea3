mod common;

use common::{log_space, psi, rng, slope};
use krr_deriv::kernels::{KernelSpec, MultiIndex};
use krr_deriv::spectral::{
    bias_scaling, effective_dimension_beta, effective_dimension_envelope, effective_dimension_grid, effective_dimension_scaling,
    equivalent_kernel_bound, kappa_beta, kappa_tilde, rkhs_bound, rkhs_norm_inequality_check,
    rkhs_norm_inequality_check_general, FeatureKrr, HolderFunction, SpectralKernel, SUP_GRID,
};
use krr_deriv::Error;
use rand::Rng;
use rand_distr::StandardNormal;

fn grid(count: usize) -> Vec<f64> {
    (0..count).map(|t| t as f64 / (count - 1) as f64).collect()
}

/// `sup_x sum_i mu_i/(lambda + mu_i) psi_i^{(m)}(x)^2` by brute force.
fn direct_effective_dimension(alpha: f64, terms: usize, lambda: f64, m: usize, points: usize) -> f64 {
    grid(points)
        .iter()
        .map(|&x| {
            (1..=terms)
                .map(|i| {
                    let mu = (i as f64).powf(-2.0 * alpha);
                    mu / (lambda + mu) * psi(i, m, x).powi(2)
                })
                .sum::<f64>()
        })
        .fold(f64::MIN, f64::max)
}

#[test]
fn effective_dimension_matches_direct_summation() {
    let k = SpectralKernel::new(2.0, 3000).unwrap();
    for &lambda in &[1e-6, 1e-3, 0.1] {
        for m in 0..2 {
            let ours = effective_dimension_grid(&k, lambda, m, 301).unwrap();
            let want = direct_effective_dimension(2.0, 3000, lambda, m, 301);
            assert!((ours - want).abs() < 1e-9 * want, "lambda {lambda} m {m}: {ours} vs {want}");
        }
    }
}

#[test]
fn effective_dimension_exponents() {
    let k = SpectralKernel::new(2.0, 100_000).unwrap();
    let lambdas = log_space(1e-8, 1e-2, 13);
    for m in 0..2 {
        let fit = effective_dimension_scaling(&k, &lambdas, m).unwrap();
        let want = -(2.0 * m as f64 + 1.0) / 4.0;
        assert!((fit.slope - want).abs() < 0.1 * want.abs(), "m={m}: slope {}", fit.slope);
        let lx: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
        let ly: Vec<f64> = fit.values.iter().map(|v| v.ln()).collect();
        assert!((slope(&lx, &ly) - fit.slope).abs() < 1e-10);
    }
}

#[test]
fn bias_exponents() {
    let alpha = 3.0;
    let k = SpectralKernel::new(alpha, 2000).unwrap();
    let f0 = HolderFunction::standard(alpha, 2000, SUP_GRID).unwrap();
    let lambdas = log_space(1e-10, 1e-4, 7);
    for m in 0..3 {
        let fit = bias_scaling(&k, &f0, &lambdas, m).unwrap();
        let want = 0.5 - m as f64 / (2.0 * alpha);
        assert!((fit.slope - want).abs() < 0.1 * want, "m={m}: slope {} vs {want}", fit.slope);
        // Check one value by direct summation.
        let l = lambdas[3];
        let c = f0.coefficients();
        let direct = grid(SUP_GRID)
            .iter()
            .map(|&x| {
                (0..c.len())
                    .map(|i| {
                        let mu = ((i + 1) as f64).powf(-2.0 * alpha);
                        l / (l + mu) * c[i] * psi(i + 1, m, x)
                    })
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        assert!((fit.values[3] - direct).abs() < 1e-9 * direct.max(1e-300));
    }
}

#[test]
fn bound_report_is_consistent_and_dominates_a_fit() {
    let alpha = 2.0;
    let k = SpectralKernel::new(alpha, 200).unwrap();
    let f0 = HolderFunction::standard(alpha, 200, SUP_GRID).unwrap();
    let (n, lambda, sigma) = (2000, 1.0, 0.1);
    let report = equivalent_kernel_bound(&k, &f0, lambda, n, sigma, 1).unwrap();
    assert_eq!(report.recompute(), report.bound_value);
    assert!(report.c_n_kappa < 1.0);
    assert!(report.kappa_tilde_beta2 <= report.kappa_beta * report.kappa_beta + 1e-12);

    let mut r = rng(3);
    let x: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let y: Vec<f64> =
        x.iter().map(|&t| f0.eval_deriv(0, t) + sigma * r.sample::<f64, _>(StandardNormal)).collect();
    let coef = FeatureKrr::new(&k, &x, &y).unwrap().coefficients(lambda).unwrap();
    let err = grid(SUP_GRID)
        .iter()
        .map(|&t| {
            let fit: f64 = (0..coef.len()).map(|i| coef[i] * psi(i + 1, 1, t)).sum();
            (fit - f0.eval_deriv(1, t)).abs()
        })
        .fold(0.0, f64::max);
    assert!(err <= report.bound_value, "error {err} above bound {}", report.bound_value);

    let rk = rkhs_bound(&k, &f0, lambda, n, sigma, 1, 0.05).unwrap();
    assert_eq!(rk.recompute(), rk.bound_value);
}

#[test]
fn small_samples_are_non_contractive() {
    let k = SpectralKernel::new(2.0, 2000).unwrap();
    let f0 = HolderFunction::standard(2.0, 2000, SUP_GRID).unwrap();
    let out = equivalent_kernel_bound(&k, &f0, 1e-3, 500, 0.1, 1);
    assert!(matches!(out, Err(Error::NonContractive { c }) if c >= 1.0));
}

#[test]
fn equivalent_norm_inequality() {
    let k = SpectralKernel::new(2.0, 400).unwrap();
    for m in 0..2 {
        let worst = rkhs_norm_inequality_check(&k, 1e-3, m, 200, 1.0, 400, 5).unwrap();
        assert!(worst <= 1.0 + 1e-6, "m={m}: ratio {worst}");
        assert!(worst > 0.05);
    }
    // Independent draw: sup |f^{(m)}| <= kappa_tilde |f|_{H~} on the sup grid.
    let lambda = 1e-3;
    let mut r = rng(9);
    let kt = kappa_tilde(&k, lambda, 1).unwrap();
    for _ in 0..20 {
        let f: Vec<f64> = (1..=100).map(|i| r.sample::<f64, _>(StandardNormal) / (i as f64).powi(3)).collect();
        let norm: f64 = f
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mu = ((i + 1) as f64).powi(-4);
                c * c * (lambda + mu) / mu
            })
            .sum::<f64>()
            .sqrt();
        let sup = grid(SUP_GRID)
            .iter()
            .map(|&x| f.iter().enumerate().map(|(i, c)| c * psi(i + 1, 1, x)).sum::<f64>().abs())
            .fold(0.0, f64::max);
        assert!(sup <= kt * norm * (1.0 + 1e-6));
    }
}

#[test]
fn kernel_norm_inequality() {
    for (spec, beta) in [("matern:2.5", vec![1]), ("sobolev2", vec![1]), ("rbf:0.3", vec![2]), ("product:matern:2.5,rbf:0.5", vec![1, 0])] {
        let kernel: KernelSpec<f64> = spec.parse().unwrap();
        let beta = MultiIndex::new(beta);
        let grid = if beta.dim() == 1 { 401 } else { 41 };
        let worst = rkhs_norm_inequality_check_general(&kernel, &beta, 100, 6, grid, 2).unwrap();
        assert!(worst <= 1.0 + 1e-6, "{spec}: ratio {worst}");
    }
}

#[test]
fn kappa_beta_on_spectral_matches_sum() {
    let k = SpectralKernel::new(3.0, 50).unwrap();
    let spec = KernelSpec::Spectral(k.clone());
    let v = kappa_beta(&spec, &MultiIndex::scalar(1), 101).unwrap();
    let brute = grid(101)
        .iter()
        .map(|&x| (1..=50).map(|i| (i as f64).powi(-6) * psi(i, 1, x).powi(2)).sum::<f64>())
        .fold(0.0, f64::max);
    assert!((v * v - brute).abs() < 1e-10 * brute);
    // Shrinking every eigenvalue lowers the diagonal.
    assert!(effective_dimension_beta(&k, 1e-4, 1).unwrap() * 1e-4 <= v * v);
}

#[test]
fn envelope_matches_term_wise_sum() {
    let k = SpectralKernel::new(2.0, 10_000).unwrap();
    let env = effective_dimension_envelope(&k, 1.0, 0).unwrap();
    let want: f64 = (1..=10_000)
        .map(|i| {
            let mu = (i as f64).powi(-4);
            let sup2 = if i == 1 { 1.0 } else { 2.0 };
            mu / (1.0 + mu) * sup2
        })
        .sum();
    assert!((env - want).abs() < 1e-10 * want);
    // The sup of the diagonal never exceeds the envelope and is at least half of it.
    let sup = effective_dimension_beta(&k, 1.0, 0).unwrap();
    assert!(sup <= env && 2.0 * sup >= env);
}

#[test]
fn effective_dimension_decreases_in_lambda() {
    let k = SpectralKernel::new(2.0, 2000).unwrap();
    for m in 0..2 {
        let v: Vec<f64> = log_space(1e-6, 1.0, 8).iter().map(|&l| effective_dimension_beta(&k, l, m).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] > w[1]), "m={m}: {v:?}");
    }
}

#[test]
fn truncation_is_stable() {
    let (a, b): (SpectralKernel<f64>, SpectralKernel<f64>) = (SpectralKernel::new(2.0, 50_000).unwrap(), SpectralKernel::new(2.0, 100_000).unwrap());
    for &l in &[1e-8, 1e-4, 1e-2] {
        for m in 0..2 {
            let (x, y): (f64, f64) = (effective_dimension_beta(&a, l, m).unwrap(), effective_dimension_beta(&b, l, m).unwrap());
            assert!((x - y).abs() < 5e-3 * y, "lambda {l} m {m}: {x} vs {y}");
        }
    }
}

#[test]
fn sobolev_diagonal_sup() {
    let k: KernelSpec<f64> = "sobolev2".parse().unwrap();
    let v = kappa_beta(&k, &MultiIndex::scalar(0), SUP_GRID).unwrap();
    assert!((v - (7.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn bound_with_heavy_regularization() {
    // With lambda huge, f_lambda is close to 0 and the gap terms reduce to
    // sup norms of the target itself.
    let alpha = 2.0f64;
    let k: SpectralKernel<f64> = SpectralKernel::new(alpha, 100).unwrap();
    let f0 = HolderFunction::standard(alpha, 100, SUP_GRID).unwrap();
    let (n, sigma) = (100_000, 0.1);
    let r = equivalent_kernel_bound(&k, &f0, 1e6, n, sigma, 1).unwrap();
    let c = r.c_n_kappa;
    let (kt, ktb): (f64, f64) = (r.kappa_tilde2.sqrt(), r.kappa_tilde_beta2.sqrt());
    let s1 = f0.sup_norm(1, SUP_GRID);
    let s0 = f0.sup_norm(0, SUP_GRID);
    let noise = ktb * kt * sigma * (20.0 * (n as f64).ln()).sqrt() / ((n as f64).sqrt() * (1.0 - c));
    let hand = s1 + ktb / kt * c / (1.0 - c) * s0 + noise;
    assert!((r.bound_value - hand).abs() < 1e-5 * hand, "{} vs {hand}", r.bound_value);
}
