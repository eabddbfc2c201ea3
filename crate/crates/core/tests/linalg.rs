mod common;

use common::rng;
use krr_deriv::kernels::KernelSpec;
use krr_deriv::linalg::{chol_shifted, logdet, solve, Matrix};
use krr_deriv::Error;
use nalgebra::DMatrix;
use rand::Rng;

fn random_spd(n: usize, seed: u64) -> (Matrix<f64>, DMatrix<f64>) {
    let mut r = rng(seed);
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
    let m = Matrix::from_fn(n, n, |i, j| g[(i, j)]);
    (m, g)
}

#[test]
fn solve_and_logdet_match_nalgebra() {
    for (n, seed) in [(5, 1), (20, 2), (60, 3)] {
        let (m, g) = random_spd(n, seed);
        let shift = 0.3;
        let f = chol_shifted(&m, shift).unwrap();
        let shifted = &g + DMatrix::identity(n, n) * shift;
        let oracle = shifted.clone().cholesky().unwrap();

        let mut r = rng(seed + 100);
        let b = Matrix::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
        let bn = DMatrix::from_fn(n, 3, |i, j| b[(i, j)]);
        let x = solve(&f, &b).unwrap();
        let xo = oracle.solve(&bn);
        for i in 0..n {
            for j in 0..3 {
                assert!((x[(i, j)] - xo[(i, j)]).abs() < 1e-10 * (1.0 + xo[(i, j)].abs()));
            }
        }
        let ld_oracle = 2.0 * oracle.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        assert!((logdet(&f) - ld_oracle).abs() < 1e-10 * (1.0 + ld_oracle.abs()));

        let inv = shifted.try_inverse().unwrap();
        for (i, d) in f.inverse_diagonal().iter().enumerate() {
            assert!((d - inv[(i, i)]).abs() < 1e-10 * inv[(i, i)].abs());
        }
    }
}

#[test]
fn small_identity_cases() {
    let mut g = Matrix::identity(2);
    g.add_diagonal(1.0);
    let f = chol_shifted(&g, 0.0).unwrap();
    assert!((f.logdet() - 4f64.ln()).abs() < 1e-15);
    let f = chol_shifted(&Matrix::identity(3), 1.0).unwrap();
    let x = f.solve_vec(&[2.0, 4.0, 6.0]).unwrap();
    for (v, e) in x.iter().zip([1.0f64, 2.0, 3.0]) {
        assert!((v - e).abs() < 1e-15 * 4.0);
    }
}

#[test]
fn singular_gram_is_rescued_by_jitter() {
    // Duplicated design points make the unshifted Gram matrix singular.
    let xs = [0.1, 0.1, 0.5, 0.5, 0.9];
    let k: KernelSpec<f64> = "rbf:0.3".parse().unwrap();
    let g = k.gram(&Matrix::column(&xs)).unwrap();
    let f = chol_shifted(&g, 0.0).unwrap();
    assert!(f.jitter_used() > 0.0);
    let y = [1.0, 1.0, 0.0, 0.0, -1.0];
    let alpha = f.solve_vec(&y).unwrap();
    assert!(alpha.iter().all(|v| v.is_finite()));
}

#[test]
fn indefinite_matrix_is_reported() {
    let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
    assert!(matches!(chol_shifted(&g, 0.0), Err(Error::FactorizationFailed { .. })));
    assert!(chol_shifted(&g, 1.5).is_ok());
}

#[test]
fn single_precision_agrees_with_double() {
    let (m, _) = random_spd(12, 9);
    let m32 = Matrix::from_fn(12, 12, |i, j| m[(i, j)] as f32);
    let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
    let b32: Vec<f32> = b.iter().map(|&v| v as f32).collect();
    let x = chol_shifted(&m, 1.0).unwrap().solve_vec(&b).unwrap();
    let x32 = chol_shifted(&m32, 1.0f32).unwrap().solve_vec(&b32).unwrap();
    for (a, c) in x.iter().zip(&x32) {
        assert!((a - *c as f64).abs() < 1e-4 * (1.0 + a.abs()));
    }
}
