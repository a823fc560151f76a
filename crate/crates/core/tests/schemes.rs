mod common;

use std::sync::Arc;

use common::rel_diff;
use nalgebra::{DMatrix, DVector};
use spde_fbm::fbm::{FbmGenerator, GeneratorMethod};
use spde_fbm::harness::spec::ExperimentSpec;
use spde_fbm::harness::study::{discretize, frozen_permeability};
use spde_fbm::jumps::{JumpConfig, JumpPath};
use spde_fbm::matfunc::{expm_action, CsrMatrix, KrylovConfig};
use spde_fbm::spatial::{assemble_operator, build_mesh, project_nodal, Diffusion, DiscreteOperator, VelocityField};
use spde_fbm::steppers::{
    run_trajectory, run_trajectory_with, step_setd1, LinearReaction, NoiseSource, SchemeConfig, SemilinearProblem,
    StateVector,
};
use spde_fbm::{rng, HurstParam, Scheme};

fn slope(points: &[(f64, f64)]) -> f64 {
    spde_fbm::harness::estimate_order(points).unwrap()
}

/// Pure diffusion with homogeneous Dirichlet data at `x = 0`, no shift.
fn heat_problem() -> (spde_fbm::spatial::Mesh, Arc<DiscreteOperator>, SemilinearProblem) {
    let mesh = build_mesh(3.0, 2.0, 12, 8).unwrap();
    let vel = VelocityField::uniform(&mesh, [0.0, 0.0]);
    let mut op = assemble_operator(&mesh, &Diffusion::isotropic(0.05), &vel, 0.0, false).unwrap();
    op.dirichlet_lift.iter_mut().for_each(|v| *v = 0.0);
    let op = Arc::new(op);
    let x0 = project_nodal(&mesh, |p| (std::f64::consts::PI * p[0] / 6.0).sin() * (1.0 + 0.3 * p[1]));
    let problem = SemilinearProblem::on_mesh(op.clone(), &mesh, Arc::new(LinearReaction(0.0)), &x0);
    (mesh, op, problem)
}

fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.get(i, j))
}

#[test]
fn scalar_decay_is_first_order() {
    let op = DiscreteOperator::from_matrices(CsrMatrix::identity(1), CsrMatrix::from_dense(&[vec![1.0]]), 0.0);
    let p = SemilinearProblem::algebraic(Arc::new(op), Arc::new(LinearReaction(0.0)), vec![1.0]);
    let pts: Vec<(f64, f64)> = (4..=8)
        .map(|k| {
            let dt = 2f64.powi(-k);
            let cfg = SchemeConfig::new(Scheme::Implicit, dt, 1 << k);
            let u = run_trajectory(&p, &cfg, None, None).unwrap().coefficients[0];
            (dt, (u - (-1.0f64).exp()).abs())
        })
        .collect();
    assert!((slope(&pts) - 1.0).abs() < 0.1, "{pts:?}");
}

#[test]
fn exponential_schemes_reproduce_the_semigroup() {
    let (_, op, p) = heat_problem();
    let cfg_k = KrylovConfig {
        tolerance: 1e-10,
        ..KrylovConfig::default()
    };
    let exact = expm_action(&p.generator(), 1.0, &p.initial, &cfg_k).unwrap();
    for scheme in [Scheme::Setd1, Scheme::Sers] {
        for dt in [0.25, 1.0 / 32.0] {
            let mut cfg = SchemeConfig::new(scheme, dt, (1.0 / dt) as usize);
            cfg.krylov = cfg_k;
            let w = run_trajectory(&p, &cfg, None, None).unwrap().coefficients;
            assert!(rel_diff(&w, &exact) <= 1e-6, "{scheme} dt {dt}: {}", rel_diff(&w, &exact));
        }
    }
    assert!(op.n_free() > 0);
}

#[test]
fn implicit_euler_is_first_order_against_dense_flow() {
    let (_, op, p) = heat_problem();
    let m = dense(&op.mass);
    let k = dense(&op.stiffness_advection);
    let generator = -m.clone().lu().solve(&k).unwrap();
    let exact = generator.exp() * DVector::from_column_slice(&p.initial);
    let pts: Vec<(f64, f64)> = (4..=8)
        .map(|e| {
            let dt = 2f64.powi(-e);
            let cfg = SchemeConfig::new(Scheme::Implicit, dt, 1 << e);
            let w = run_trajectory(&p, &cfg, None, None).unwrap().coefficients;
            (dt, rel_diff(&w, exact.as_slice()))
        })
        .collect();
    let s = slope(&pts);
    assert!((s - 1.0).abs() <= 0.1, "slope {s}: {pts:?}");
}

fn noise_setup(spec: &ExperimentSpec) -> (spde_fbm::harness::Discretization, Vec<spde_fbm::FbmIncrementBlock>) {
    let perm = frozen_permeability(spec).unwrap();
    let disc = discretize(spec, spec.mesh, &perm, true).unwrap();
    let gen = FbmGenerator::new(spec.hurst, 16, 1.0 / 16.0, GeneratorMethod::Circulant).unwrap();
    let blocks = disc
        .basis
        .modes()
        .iter()
        .enumerate()
        .map(|(k, _)| gen.sample(&mut rng::derive(3, &[k as u64])))
        .collect();
    (disc, blocks)
}

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        mesh: (12, 8),
        modes_per_dim: 8,
        hurst: HurstParam::new(0.6).unwrap(),
        ..ExperimentSpec::default()
    }
}

#[test]
fn sers_equals_setd1_on_shifted_operator_for_linear_f() {
    let spec = small_spec();
    let (disc, blocks) = noise_setup(&spec);
    let lam = -0.4;
    let c0 = disc.op.c0;
    let mass = disc.op.mass.clone();
    let k = disc.op.stiffness_advection.clone();
    let original = SemilinearProblem::algebraic(
        Arc::new(DiscreteOperator::from_matrices(mass.clone(), k.clone(), c0)),
        Arc::new(LinearReaction(lam)),
        vec![0.1; k.nrows()],
    );
    // -M_L^{-1} K + (lam + c0) I  ==  -M_L^{-1} (K - (lam + c0) M_L)
    let lumped = mass.row_sums();
    let mut shifted_rows = k.to_dense();
    for (i, row) in shifted_rows.iter_mut().enumerate() {
        row[i] -= (lam + c0) * lumped[i];
    }
    let shifted = SemilinearProblem::algebraic(
        Arc::new(DiscreteOperator::from_matrices(mass, CsrMatrix::from_dense(&shifted_rows), 0.0)),
        Arc::new(LinearReaction(0.0)),
        vec![0.1; k.nrows()],
    );
    let noise = NoiseSource {
        basis: &disc.basis,
        blocks: &blocks,
        amplitude: 2.0,
    };
    let mut sers = SchemeConfig::new(Scheme::Sers, 1.0 / 16.0, 16);
    sers.krylov.tolerance = 1e-12;
    let mut setd1 = sers.clone();
    setd1.scheme = Scheme::Setd1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_trajectory_with(&original, &sers, Some(noise), None, |s| a.push(s.coefficients.clone())).unwrap();
    run_trajectory_with(&shifted, &setd1, Some(noise), None, |s| b.push(s.coefficients.clone())).unwrap();
    for (m, (x, y)) in a.iter().zip(&b).enumerate().skip(1) {
        assert!(rel_diff(x, y) <= 1e-8, "step {m}: {}", rel_diff(x, y));
    }
}

#[test]
fn noise_enters_linearly() {
    let mut spec = small_spec();
    spec.reaction = spde_fbm::harness::Reaction::None;
    let (disc, blocks) = noise_setup(&spec);
    for scheme in Scheme::ALL {
        let mut cfg = SchemeConfig::new(scheme, 1.0 / 16.0, 16);
        cfg.krylov.tolerance = 1e-12;
        let run = |amp: f64| {
            let noise = NoiseSource {
                basis: &disc.basis,
                blocks: &blocks,
                amplitude: amp,
            };
            run_trajectory(&disc.problem, &cfg, Some(noise), None).unwrap().coefficients
        };
        let det = run(0.0);
        let one: Vec<f64> = run(1.0).iter().zip(&det).map(|(a, b)| a - b).collect();
        let two: Vec<f64> = run(2.0).iter().zip(&det).map(|(a, b)| a - b).collect();
        let doubled: Vec<f64> = one.iter().map(|v| 2.0 * v).collect();
        assert!(rel_diff(&two, &doubled) <= 1e-6, "{scheme}: {}", rel_diff(&two, &doubled));
    }
}

#[test]
fn jumps_off_is_bit_identical() {
    let spec = small_spec();
    let (disc, blocks) = noise_setup(&spec);
    let noise = NoiseSource {
        basis: &disc.basis,
        blocks: &blocks,
        amplitude: 2.0,
    };
    let active = JumpConfig::with_default_profile(&disc.mesh, 3.0, 0.5).unwrap();
    let path = JumpPath::sample(&active, 16, 1.0 / 16.0, &mut rng::derive(5, &[]));
    for scheme in Scheme::ALL {
        let plain = SchemeConfig::new(scheme, 1.0 / 16.0, 16);
        let base = run_trajectory(&disc.problem, &plain, Some(noise), None).unwrap();
        // a jump path supplied while jumps are disabled is ignored
        let ignored = run_trajectory(&disc.problem, &plain, Some(noise), Some(&path)).unwrap();
        assert_eq!(base, ignored);
        // zero jump amplitudes with jumps enabled change nothing either
        let mut on = plain.clone();
        on.jump = active.clone();
        let zeros = run_trajectory(&disc.problem, &on, Some(noise), Some(&JumpPath::zeros(16, 1.0 / 16.0))).unwrap();
        assert_eq!(base, zeros);
        let jumped = run_trajectory(&disc.problem, &on, Some(noise), Some(&path)).unwrap();
        assert_ne!(base, jumped);
    }
}

#[test]
fn trajectory_matches_explicit_steps() {
    let spec = small_spec();
    let (disc, blocks) = noise_setup(&spec);
    let noise = NoiseSource {
        basis: &disc.basis,
        blocks: &blocks,
        amplitude: 2.0,
    };
    let cfg = SchemeConfig::new(Scheme::Setd1, 1.0 / 16.0, 1);
    let traj = run_trajectory(&disc.problem, &cfg, Some(noise), None).unwrap();
    let inc = spde_fbm::noise::noise_increment(&disc.basis, &blocks, 0, 2.0).unwrap();
    let xi = disc.op.free_part(&inc.values);
    let step = step_setd1(&disc.problem, &StateVector::initial(&disc.problem), Some(&xi), None, &cfg).unwrap();
    assert_eq!(traj, step);

    let zero = SchemeConfig::new(Scheme::Implicit, 1.0 / 16.0, 0);
    assert_eq!(
        run_trajectory(&disc.problem, &zero, Some(noise), None).unwrap(),
        StateVector::initial(&disc.problem)
    );
    let again = run_trajectory(&disc.problem, &cfg, Some(noise), None).unwrap();
    assert_eq!(traj, again);
}

#[test]
fn short_noise_blocks_are_rejected() {
    let spec = small_spec();
    let (disc, blocks) = noise_setup(&spec);
    let noise = NoiseSource {
        basis: &disc.basis,
        blocks: &blocks,
        amplitude: 2.0,
    };
    let cfg = SchemeConfig::new(Scheme::Setd1, 1.0 / 32.0, 32);
    assert!(matches!(
        run_trajectory(&disc.problem, &cfg, Some(noise), None),
        Err(spde_fbm::Error::StepIndexOutOfRange { .. })
    ));
}
