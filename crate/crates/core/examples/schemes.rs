//! One noise path integrated with all three schemes at several step sizes
//! on a small mesh.

use spde_fbm::harness::study::{discretize, frozen_permeability, reference_generator, sample_blocks, solve_path};
use spde_fbm::harness::ExperimentSpec;
use spde_fbm::Scheme;

fn main() -> spde_fbm::Result<()> {
    let base = ExperimentSpec {
        mesh: (24, 16),
        modes_per_dim: 16,
        dt_reference: 1.0 / 256.0,
        ..ExperimentSpec::default()
    };
    let perm = frozen_permeability(&base)?;
    let gen = reference_generator(&base)?;
    for scheme in Scheme::ALL {
        let spec = ExperimentSpec { scheme, ..base.clone() };
        let disc = discretize(&spec, spec.mesh, &perm, true)?;
        let blocks = sample_blocks(&spec, &gen, &disc.basis, 0);
        let reference = solve_path(&spec, &disc, &blocks, None, spec.dt_reference)?;
        print!("{scheme:<8}");
        for k in [4, 5, 6, 7] {
            let dt = 2f64.powi(-k);
            let w = solve_path(&spec, &disc, &blocks, None, dt)?;
            let d: Vec<f64> = w.iter().zip(&reference).map(|(a, b)| a - b).collect();
            print!("  dt=1/{:<3} err {:.3e}", 1 << k, disc.op.mass_norm(&d));
        }
        println!();
    }
    Ok(())
}
