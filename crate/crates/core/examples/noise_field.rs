//! Builds the truncated cosine basis on a mesh and synthesizes one
//! fractional noise increment field.

use spde_fbm::fbm::{FbmGenerator, GeneratorMethod};
use spde_fbm::noise::{noise_increment, SpectralBasis};
use spde_fbm::spatial::mesh::build_mesh;
use spde_fbm::{rng, HurstParam};

fn main() -> spde_fbm::Result<()> {
    let mesh = build_mesh(3.0, 2.0, 24, 16)?;
    for n in [4, 8, 16, 32] {
        let basis = SpectralBasis::build(3.0, 2.0, 1.0, 0.001, n, &mesh)?;
        println!("{n:>2} modes per dimension: {:>4} modes, trace {:.6}", basis.len(), basis.trace());
    }
    let basis = SpectralBasis::build(3.0, 2.0, 1.0, 0.001, 16, &mesh)?;
    let gen = FbmGenerator::new(HurstParam::new(0.7)?, 16, 1.0 / 16.0, GeneratorMethod::Circulant)?;
    let blocks: Vec<_> = (0..basis.len()).map(|k| gen.sample(&mut rng::derive(9, &[k as u64]))).collect();
    let field = noise_increment(&basis, &blocks, 0, 2.0)?.values;
    let (lo, hi) = field.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let rms = (field.iter().map(|v| v * v).sum::<f64>() / field.len() as f64).sqrt();
    println!("first increment on {} nodes: min {lo:.4}, max {hi:.4}, rms {rms:.4}", field.len());
    Ok(())
}
