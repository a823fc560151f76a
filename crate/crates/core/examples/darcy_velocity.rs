//! Solves the Darcy pressure problem for a random log-normal permeability
//! and reports the velocity field and the cell Péclet number.

use spde_fbm::rng;
use spde_fbm::spatial::mesh::build_mesh;
use spde_fbm::spatial::{cell_peclet, solve_darcy, Diffusion, LogPermeability};

fn main() -> spde_fbm::Result<()> {
    let perm = LogPermeability::sample((3.0, 2.0), 6, 1.0, &mut rng::derive(2024, &[]))?;
    for (nx, ny) in [(12, 8), (24, 16), (48, 32)] {
        let mesh = build_mesh(3.0, 2.0, nx, ny)?;
        let k = perm.on_mesh(&mesh);
        let vel = solve_darcy(&mesh, &k)?;
        let peclet = cell_peclet(&mesh, &Diffusion::isotropic(0.01), &vel);
        let div = vel.weak_divergence(&mesh);
        let max_div = div.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        println!(
            "{nx:>2}x{ny:<2} permeability in [{:.3}, {:.3}]  max |q| {:.4}  cell Péclet {peclet:.2}  max |weak div| {max_div:.2e}",
            k.iter().copied().fold(f64::MAX, f64::min),
            k.iter().copied().fold(f64::MIN, f64::max),
            vel.max_speed(),
        );
    }
    Ok(())
}
