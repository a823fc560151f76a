//! A reduced spatial convergence study on three nested meshes.

use spde_fbm::harness::{run_spatial_study, ExperimentSpec};
use spde_fbm::HurstParam;

fn main() -> spde_fbm::Result<()> {
    let spec = ExperimentSpec {
        hurst: HurstParam::new(0.75)?,
        mesh: (48, 32),
        dt_reference: 1.0 / 256.0,
        n_samples: 8,
        ..ExperimentSpec::default()
    };
    let table = run_spatial_study(&spec)?;
    print!("{}", table.to_csv());
    for (k, v) in &table.metadata {
        if k == "meshes" || k == "upwind" || k == "cell_peclet_finest" {
            println!("{k} = {v}");
        }
    }
    match table.global_order {
        Some(o) => println!("spatial slope {o:.3}"),
        None => println!("spatial slope undefined"),
    }
    Ok(())
}
