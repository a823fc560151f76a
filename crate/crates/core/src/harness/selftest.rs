//! Fast oracle checks run by the `selftest` subcommand.

use rand::Rng;

use super::spec::ExperimentSpec;
use super::study::run_temporal_study;
use super::table::estimate_order;
use crate::fbm::{fgn_autocovariance, FbmGenerator, GeneratorMethod, HurstParam};
use crate::matfunc::{dense, expm_action, phi1_action, DenseMatrix, KrylovConfig};
use crate::rng;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn autocovariance() -> Check {
    let g = fgn_autocovariance(HurstParam::new(0.75).expect("valid"), 1);
    let want = 0.5 * (2f64.powf(1.5) - 2.0);
    check("fgn_autocovariance", (g - want).abs() < 1e-12, format!("gamma(1) = {g:.9}"))
}

fn fbm_law() -> Check {
    let h = HurstParam::new(0.75).expect("valid");
    let (n, dt, paths) = (16, 1.0 / 16.0, 4000);
    let gen = match FbmGenerator::new(h, n, dt, GeneratorMethod::Circulant) {
        Ok(g) => g,
        Err(e) => return check("fbm_law", false, e.to_string()),
    };
    let mut r = rng::derive(7, &[rng::tag::PROBE]);
    let (mut var, mut lag) = (Vec::with_capacity(paths), Vec::with_capacity(paths));
    for _ in 0..paths {
        let b = gen.sample(&mut r);
        var.push(b.increments()[3] * b.increments()[3]);
        lag.push(b.increments()[3] * b.increments()[4]);
    }
    let scale = dt.powf(1.5);
    let mut worst = 0.0f64;
    for (xs, target) in [(&var, scale), (&lag, scale * fgn_autocovariance(h, 1))] {
        let m = xs.iter().sum::<f64>() / paths as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (paths - 1) as f64).sqrt();
        worst = worst.max((m - target).abs() / (sd / (paths as f64).sqrt()));
    }
    check("fbm_law", worst < 5.0, format!("max deviation {worst:.2} standard errors"))
}

fn matrix_functions() -> Check {
    let n = 20;
    let mut r = rng::derive(11, &[rng::tag::PROBE]);
    let mut a = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = r.random_range(-1.0..1.0) / (n as f64).sqrt();
        }
        a[(i, i)] -= 3.0;
    }
    let v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let cfg = KrylovConfig::default();
    let (ev, pv) = match (expm_action(&a, 1.0, &v, &cfg), phi1_action(&a, 1.0, &v, &cfg)) {
        (Ok(e), Ok(p)) => (e, p),
        (Err(e), _) | (_, Err(e)) => return check("matrix_functions", false, e.to_string()),
    };
    let want = dense::expm(&a).mul_vec(&v);
    let norm = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>().sqrt();
    let diff: Vec<f64> = ev.iter().zip(&want).map(|(x, y)| x - y).collect();
    let exp_err = norm(&diff) / norm(&want);
    // A phi1(A) v = e^A v - v
    let apv = a.mul_vec(&pv);
    let res: Vec<f64> = apv.iter().zip(&ev).zip(&v).map(|((p, e), v)| p - (e - v)).collect();
    let phi_err = norm(&res) / norm(&v);
    check(
        "matrix_functions",
        exp_err <= 1e-8 && phi_err <= 1e-8,
        format!("exp rel err {exp_err:.2e}, phi1 residual {phi_err:.2e}"),
    )
}

fn regression() -> Check {
    let o = estimate_order(&[(0.5, 8e-2), (0.25, 2e-2), (0.125, 5e-3)]);
    match o {
        Ok(o) => check("estimate_order", (o - 2.0).abs() < 1e-12, format!("slope {o}")),
        Err(e) => check("estimate_order", false, e.to_string()),
    }
}

fn coupled_study() -> Check {
    let spec = ExperimentSpec {
        mesh: (6, 4),
        modes_per_dim: 4,
        dt_levels: vec![0.25, 0.125, 1.0 / 16.0],
        dt_reference: 1.0 / 16.0,
        final_time: 0.5,
        n_samples: 2,
        ..ExperimentSpec::default()
    };
    match (run_temporal_study(&spec), run_temporal_study(&spec)) {
        (Ok(a), Ok(b)) => {
            let last = a.rows.last().map_or(f64::NAN, |r| r.rms_error);
            check(
                "coupled_study",
                last == 0.0 && a.to_csv() == b.to_csv(),
                format!("finest-level error {last:e}, reproducible {}", a.to_csv() == b.to_csv()),
            )
        }
        (Err(e), _) | (_, Err(e)) => check("coupled_study", false, e.to_string()),
    }
}

pub fn run_all() -> Vec<Check> {
    vec![autocovariance(), fbm_law(), matrix_functions(), regression(), coupled_study()]
}
