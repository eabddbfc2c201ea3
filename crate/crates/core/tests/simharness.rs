mod common;

use common::fd;
use krr_deriv::simharness::{
    f01, f02, generate, rmse, run_adaptivity_check_with, run_montecarlo, run_rate_experiments, truth,
    AdaptivityOptions, Design, RateOptions, SimulationConfig, Target,
};

fn config(methods: &[&str], n: usize, sigma: f64, reps: usize) -> SimulationConfig {
    SimulationConfig {
        target: Target::F02,
        design: Design::RandomUniform,
        n,
        sigma,
        methods: methods.iter().map(|s| s.to_string()).collect(),
        orders: vec![0, 1, 2],
        replications: reps,
        eval_grid: 100,
        master_seed: 5,
        lambda_grid: None,
        fixed_lambda: None,
        nu_candidates: None,
        bandwidth_grid: None,
    }
}

#[test]
fn target_values_and_derivatives() {
    assert_eq!(f01(0, 0.5).unwrap(), 0.0);
    assert!((f01(1, 0.5).unwrap() + 2.0).abs() < 1e-14);
    assert!((f02(0, 0.0).unwrap() - 1.287682).abs() < 1e-6);
    for k in 1..=3 {
        for &x in &[0.1, 0.37, 0.8] {
            for f in [f01, f02] {
                let approx = fd(|t| f(0, t).unwrap(), k, x, 1e-3, 4);
                let exact = f(k, x).unwrap();
                assert!((approx - exact).abs() < 1e-5 * (1.0 + exact.abs()), "k={k} x={x}: {approx} vs {exact}");
            }
        }
    }
    assert!(truth(Target::F01, 4, 0.2).is_err());
}

#[test]
fn data_generation() {
    let cfg = config(&["krr:matern"], 500, 0.2, 1);
    let (x1, y1) = generate(&cfg, 0).unwrap();
    let (x2, y2) = generate(&cfg, 0).unwrap();
    assert_eq!((x1.clone(), y1.clone()), (x2, y2));
    let (x3, _) = generate(&cfg, 1).unwrap();
    assert_ne!(x1, x3);
    let resid: Vec<f64> = x1.iter().zip(&y1).map(|(&x, &y)| y - f02(0, x).unwrap()).collect();
    let mean = resid.iter().sum::<f64>() / 500.0;
    let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 499.0).sqrt();
    assert!((0.17..=0.23).contains(&sd), "sd {sd}");

    let mut exact = cfg.clone();
    exact.sigma = 0.0;
    exact.design = Design::FixedEquispaced;
    let (x, y) = generate(&exact, 3).unwrap();
    assert_eq!(x[0], 1.0 / 500.0);
    assert_eq!(x[499], 1.0);
    assert!(x.iter().zip(&y).all(|(&a, &b)| b == f02(0, a).unwrap()));
}

#[test]
fn rmse_definition() {
    let a = [1.0, 2.0, 3.0];
    assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    let b: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
    assert!((rmse(&b, &a).unwrap() - 0.5).abs() < 1e-15);
    let c = [0.3, -1.2, 4.0];
    let direct = ((0.7f64.powi(2) + 3.2f64.powi(2) + 1.0) / 3.0).sqrt();
    assert!((rmse(&c, &a).unwrap() - direct).abs() < 1e-14);
    assert!(rmse(&a[..2], &a).is_err());
}

#[test]
fn config_validation() {
    let mut cfg = config(&["krr:matern"], 5, 0.2, 1);
    assert!(cfg.validate().is_err());
    cfg.n = 50;
    assert!(cfg.validate().is_ok());
    cfg.orders = vec![4];
    assert!(cfg.validate().is_err());
    cfg.orders = vec![0];
    cfg.methods = vec!["nonsense".into()];
    assert!(cfg.validate().is_err());
    let text = r#"{"target":"f01","design":"fixed_equispaced","n":50,"sigma":0.1,"methods":["locpoly"],"orders":[1],"replications":2,"bogus":1}"#;
    assert!(serde_json::from_str::<SimulationConfig>(text).is_err());
}

#[test]
fn krr_rows_share_tuning_across_orders() {
    let cfg = config(&["krr:matern", "krr:sobolev2", "locpoly"], 80, 0.2, 3);
    let report = run_montecarlo(&cfg).unwrap();
    assert_eq!(report.rows.len(), 3 * 3 * 3);
    for method in ["krr:matern", "krr:sobolev2"] {
        for rep in 0..3 {
            let rows: Vec<_> = report.rows.iter().filter(|r| r.method == method && r.rep == rep).collect();
            assert_eq!(rows.len(), 3);
            for r in &rows {
                assert_eq!(r.lambda, rows[0].lambda);
                assert_eq!(r.sigma2, rows[0].sigma2);
                assert_eq!(r.nu, rows[0].nu);
                assert!(r.rmse.unwrap() >= 0.0);
            }
        }
    }
    assert!(report.failures.is_empty());
    let again = run_montecarlo(&cfg).unwrap();
    assert_eq!(serde_json::to_string(&report.rows).unwrap(), serde_json::to_string(&again.rows).unwrap());
}

#[test]
fn noiseless_interpolation_is_accurate() {
    let mut cfg = config(&["krr:matern"], 500, 0.0, 1);
    cfg.orders = vec![0];
    cfg.fixed_lambda = Some(1e-10);
    let report = run_montecarlo(&cfg).unwrap();
    let v = report.median_rmse("krr:matern", 0).unwrap();
    assert!(v < 1e-4, "rmse {v}");
}

#[test]
fn noise_increases_error() {
    let mut quiet = config(&["krr:matern"], 100, 0.0, 3);
    quiet.fixed_lambda = Some(1e-8);
    let mut noisy = quiet.clone();
    noisy.sigma = 0.2;
    let q = run_montecarlo(&quiet).unwrap();
    let n = run_montecarlo(&noisy).unwrap();
    for k in 0..3 {
        assert!(q.median_rmse("krr:matern", k).unwrap() < n.median_rmse("krr:matern", k).unwrap());
    }
}

#[test]
fn unsupported_orders_are_recorded_as_missing() {
    let mut cfg = config(&["krr:sobolev2"], 40, 0.1, 2);
    cfg.orders = vec![0, 3];
    let report = run_montecarlo(&cfg).unwrap();
    let missing = report.rows.iter().filter(|r| r.k == 3 && r.rmse.is_none()).count();
    assert_eq!(missing, 2);
    assert!(!report.failures.is_empty());
    let summary = report.summary();
    let s3 = summary.iter().find(|s| s.k == 3).unwrap();
    assert_eq!((s3.count, s3.missing), (0, 2));
}

#[test]
fn adaptivity_degenerate_grid() {
    let opts = AdaptivityOptions { lambda_grid: vec![1e-4], kernel_terms: 32, ..AdaptivityOptions::default() };
    let r = run_adaptivity_check_with(3.0, 100, 2, 1, &opts).unwrap();
    assert_eq!(r.spread_cells, 0);
    let again = run_adaptivity_check_with(3.0, 100, 2, 1, &opts).unwrap();
    assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    assert!(run_adaptivity_check_with(2.0, 100, 2, 1, &opts).is_err());
}

#[test]
fn rate_experiment_contract() {
    let opts = RateOptions { kernel_terms: 32, grid: 100, ..RateOptions::default() };
    let fits = run_rate_experiments(&[0, 1], 2.0, &[50, 100, 200, 500], 2, 3, &opts).unwrap();
    assert_eq!(fits.len(), 2);
    assert_eq!(fits[0].theoretical_slope, 0.4);
    assert!((fits[1].theoretical_slope - 0.2).abs() < 1e-15);
    assert!(fits[0].slope > 0.0);
    assert!(run_rate_experiments(&[0], 2.0, &[50, 100, 200], 2, 3, &opts).is_err());
    assert!(run_rate_experiments(&[0], 2.0, &[50, 60, 70, 80], 2, 3, &opts).is_err());
    assert!(run_rate_experiments(&[2], 2.0, &[50, 100, 200, 500], 2, 3, &opts).is_err());
}
