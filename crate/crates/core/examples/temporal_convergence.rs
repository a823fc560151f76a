//! A reduced temporal convergence study; pass a scheme name to choose the
//! integrator, e.g. `cargo run --release --example temporal_convergence sers`.

use spde_fbm::harness::{run_temporal_study, ExperimentSpec};
use spde_fbm::{HurstParam, Scheme};

fn main() -> spde_fbm::Result<()> {
    let scheme: Scheme = std::env::args().nth(1).as_deref().unwrap_or("setd1").parse()?;
    let spec = ExperimentSpec {
        scheme,
        hurst: HurstParam::new(0.65)?,
        mesh: (24, 16),
        modes_per_dim: 16,
        dt_levels: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
        dt_reference: 1.0 / 512.0,
        n_samples: 12,
        ..ExperimentSpec::default()
    };
    let table = run_temporal_study(&spec)?;
    print!("{}", table.to_csv());
    match table.global_order {
        Some(o) => println!("global order {o:.3}"),
        None => println!("global order undefined"),
    }
    Ok(())
}
