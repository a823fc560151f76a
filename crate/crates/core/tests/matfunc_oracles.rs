mod common;

use common::{norm, random_vector, rel_diff, stable_matrix};
use nalgebra::DVector;
use spde_fbm::matfunc::{bicgstab, conjugate_gradient, dense, expm_action, phi1_action, CsrMatrix, KrylovConfig, SolverConfig};

#[test]
fn expm_action_matches_nalgebra_exp() {
    let cfg = KrylovConfig::default();
    for seed in 0..20 {
        let (a, m) = stable_matrix(seed, 30);
        let v = random_vector(seed, 30);
        let got = expm_action(&a, 1.0, &v, &cfg).unwrap();
        let want = m.exp() * DVector::from_column_slice(&v);
        assert!(rel_diff(&got, want.as_slice()) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn phi1_action_matches_solve_oracle() {
    let cfg = KrylovConfig::default();
    for seed in 0..20 {
        let (a, m) = stable_matrix(100 + seed, 30);
        let v = random_vector(seed, 30);
        let t = 0.7;
        let got = phi1_action(&a, t, &v, &cfg).unwrap();
        let n = m.nrows();
        let ta = &m * t;
        let e = ta.exp() - nalgebra::DMatrix::<f64>::identity(n, n);
        let want = ta.lu().solve(&(e * DVector::from_column_slice(&v))).unwrap();
        assert!(rel_diff(&got, want.as_slice()) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn dense_pade_matches_nalgebra() {
    for seed in 0..10 {
        let (a, m) = stable_matrix(200 + seed, 12);
        let ours = dense::expm(&a);
        let theirs = m.exp();
        let scale = theirs.norm();
        for i in 0..12 {
            for j in 0..12 {
                assert!((ours[(i, j)] - theirs[(i, j)]).abs() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn zero_time_is_identity() {
    let (a, _) = stable_matrix(1, 8);
    let v = random_vector(1, 8);
    assert_eq!(expm_action(&a, 0.0, &v, &KrylovConfig::default()).unwrap(), v);
    assert!(phi1_action(&a, 0.0, &v, &KrylovConfig::default()).is_err());
}

fn tridiagonal(n: usize, off: f64) -> CsrMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.abs_diff(j) {
                    0 => 4.0,
                    1 if j > i => -1.0 + off,
                    1 => -1.0 - off,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    CsrMatrix::from_dense(&rows)
}

#[test]
fn iterative_solvers_match_lu() {
    let cfg = SolverConfig::default();
    for (off, symmetric) in [(0.0, true), (0.6, false)] {
        let a = tridiagonal(40, off);
        let b = random_vector(5, 40);
        let x = if symmetric {
            conjugate_gradient(&a, &b, None, cfg).unwrap()
        } else {
            bicgstab(&a, &b, None, cfg).unwrap()
        };
        let m = nalgebra::DMatrix::from_fn(40, 40, |i, j| a.get(i, j));
        let want = m.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        assert!(rel_diff(&x, want.as_slice()) <= 1e-8);
        assert!(norm(&x) > 0.0);
    }
}
