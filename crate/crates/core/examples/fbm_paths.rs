//! Samples fBm increments with both generators and compares the empirical
//! lag covariances with the exact fGn autocovariance.

use spde_fbm::fbm::{fgn_autocovariance, FbmGenerator, GeneratorMethod};
use spde_fbm::{rng, HurstParam};

fn main() -> spde_fbm::Result<()> {
    let (n, dt, paths) = (128, 1.0 / 128.0, 2000);
    for h in [0.55, 0.75, 0.95] {
        let h = HurstParam::new(h)?;
        for method in [GeneratorMethod::Circulant, GeneratorMethod::Cholesky] {
            let gen = FbmGenerator::new(h, n, dt, method)?;
            let mut r = rng::derive(1, &[]);
            let mut acc = [0.0; 4];
            for _ in 0..paths {
                let block = gen.sample(&mut r);
                let x = block.increments();
                for (k, a) in acc.iter_mut().enumerate() {
                    *a += (0..n - k).map(|m| x[m] * x[m + k]).sum::<f64>() / (n - k) as f64;
                }
            }
            let scale = dt.powf(2.0 * h.value());
            print!("H={:.2} {method:<9}", h.value());
            for (k, a) in acc.iter().enumerate() {
                print!("  lag {k}: {:+.4} (exact {:+.4})", a / paths as f64 / scale, fgn_autocovariance(h, k));
            }
            println!();
        }
    }
    Ok(())
}
