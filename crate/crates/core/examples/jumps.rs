//! Compensated Poisson jumps: increment moments, and the ensemble mean of a
//! jump-driven linear problem against its deterministic trajectory.

use spde_fbm::harness::study::{discretize, frozen_permeability, sample_jumps, solve_path};
use spde_fbm::harness::{ExperimentSpec, Reaction};
use spde_fbm::jumps::{jump_amplitude, JumpConfig};
use spde_fbm::rng;
use spde_fbm::spatial::mesh::build_mesh;

fn main() -> spde_fbm::Result<()> {
    let mesh = build_mesh(3.0, 2.0, 12, 8)?;
    let cfg = JumpConfig::with_default_profile(&mesh, 4.0, 0.5)?;
    let dt = 0.05;
    let mut r = rng::derive(3, &[]);
    let draws: Vec<f64> = (0..50_000).map(|_| jump_amplitude(&cfg, dt, &mut r)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|a| a * a).sum::<f64>() / draws.len() as f64;
    println!("amplitude mean {mean:+.5}, variance {var:.5} (expected {:.5})", 4.0 * dt * 0.25);

    let base = ExperimentSpec {
        mesh: (12, 8),
        amplitude: 0.0,
        reaction: Reaction::None,
        dt_reference: 1.0 / 32.0,
        ..ExperimentSpec::default()
    };
    let spec = ExperimentSpec {
        jump_intensity: 5.0,
        ..base.clone()
    };
    let perm = frozen_permeability(&spec)?;
    let det = solve_path(&base, &discretize(&base, base.mesh, &perm, false)?, &[], None, 1.0 / 32.0)?;
    let disc = discretize(&spec, spec.mesh, &perm, false)?;
    let n = 500;
    let mut mean = vec![0.0; det.len()];
    for s in 0..n {
        let path = sample_jumps(&spec, &disc.jump, s);
        let w = solve_path(&spec, &disc, &[], path.as_ref(), 1.0 / 32.0)?;
        mean.iter_mut().zip(&w).for_each(|(m, x)| *m += x / n as f64);
    }
    let d: Vec<f64> = mean.iter().zip(&det).map(|(a, b)| a - b).collect();
    println!(
        "M-norm of deterministic state {:.4}, of ensemble mean minus deterministic {:.4}",
        disc.op.mass_norm(&det),
        disc.op.mass_norm(&d)
    );
    Ok(())
}
