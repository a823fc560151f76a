//! Exact-law increments of scalar fractional Brownian motion, H in (1/2, 1].
//!
//! A generator is built once for a given `(H, n_steps, dt, method)` and then
//! sampled many times: the circulant eigenvalues (or the Cholesky factor) are
//! the expensive part and are shared across modes and Monte Carlo samples.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Largest path length the O(n^3) Cholesky route accepts.
pub const MAX_CHOLESKY_STEPS: usize = 4096;

/// Relative size of negative circulant eigenvalues that is treated as round-off.
const CIRCULANT_CLAMP: f64 = 1e-10;

/// Hurst index restricted to (1/2, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.5 && h <= 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    /// Standard Brownian motion. Outside the supported range, kept for
    /// checking the generators against independent increments.
    #[cfg(any(test, feature = "brownian-boundary"))]
    pub fn brownian() -> Self {
        Self(0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_degenerate(self) -> bool {
        self.0 == 1.0
    }
}

impl fmt::Display for HurstParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Autocovariance of unit-spaced fractional Gaussian noise at lag `k`.
///
/// Multiply by `dt^{2H}` for increments over steps of length `dt`.
pub fn fgn_autocovariance(h: HurstParam, k: usize) -> f64 {
    unit_fgn_autocovariance(h.0, k)
}

fn unit_fgn_autocovariance(h: f64, k: usize) -> f64 {
    let two_h = 2.0 * h;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorMethod {
    Circulant,
    Cholesky,
    /// `beta^1(t) = t xi`: every step of a block shares one standard normal.
    DegenerateH1,
}

impl GeneratorMethod {
    /// Default choice: circulant embedding, or the degenerate path at H = 1.
    pub fn for_hurst(h: HurstParam) -> Self {
        if h.is_degenerate() {
            GeneratorMethod::DegenerateH1
        } else {
            GeneratorMethod::Circulant
        }
    }
}

impl std::str::FromStr for GeneratorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "circulant" => Ok(Self::Circulant),
            "cholesky" => Ok(Self::Cholesky),
            "degenerate" | "h1" => Ok(Self::DegenerateH1),
            other => Err(invalid("fbm-method", format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for GeneratorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Circulant => "circulant",
            Self::Cholesky => "cholesky",
            Self::DegenerateH1 => "degenerate",
        };
        f.write_str(s)
    }
}

/// Increments `beta^H(t_{m+1}) - beta^H(t_m)` of one scalar path on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmIncrementBlock {
    dt: f64,
    increments: Vec<f64>,
}

impl FbmIncrementBlock {
    pub fn new(dt: f64, increments: Vec<f64>) -> Self {
        Self { dt, increments }
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn get(&self, m: usize) -> Option<f64> {
        self.increments.get(m).copied()
    }
}

enum Kernel {
    Single,
    Degenerate,
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    /// Row-major lower triangular factor of the fGn covariance.
    Cholesky { lower: Vec<f64> },
}

/// Reusable sampler for blocks of fixed length and step.
pub struct FbmGenerator {
    hurst: f64,
    n_steps: usize,
    dt: f64,
    method: GeneratorMethod,
    scale: f64,
    kernel: Kernel,
}

impl fmt::Debug for FbmGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FbmGenerator")
            .field("hurst", &self.hurst)
            .field("n_steps", &self.n_steps)
            .field("dt", &self.dt)
            .field("method", &self.method)
            .finish()
    }
}

impl FbmGenerator {
    pub fn new(h: HurstParam, n_steps: usize, dt: f64, method: GeneratorMethod) -> Result<Self> {
        Self::with_raw_hurst(h.0, n_steps, dt, method)
    }

    fn with_raw_hurst(h: f64, n_steps: usize, dt: f64, method: GeneratorMethod) -> Result<Self> {
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let degenerate = h == 1.0;
        if degenerate != (method == GeneratorMethod::DegenerateH1) {
            return Err(invalid(
                "method",
                format!("{method} cannot be used with H = {h}; the degenerate path is exactly H = 1"),
            ));
        }
        let kernel = match method {
            GeneratorMethod::DegenerateH1 => Kernel::Degenerate,
            _ if n_steps == 1 => Kernel::Single,
            GeneratorMethod::Circulant => circulant_kernel(h, n_steps)?,
            GeneratorMethod::Cholesky => cholesky_kernel(h, n_steps)?,
        };
        Ok(Self {
            hurst: h,
            n_steps,
            dt,
            method,
            scale: dt.powf(h),
            kernel,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn method(&self) -> GeneratorMethod {
        self.method
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FbmIncrementBlock {
        let n = self.n_steps;
        let increments = match &self.kernel {
            Kernel::Single => vec![self.scale * rng.sample::<f64, _>(StandardNormal)],
            Kernel::Degenerate => {
                let xi: f64 = rng.sample(StandardNormal);
                vec![self.dt * xi; n]
            }
            Kernel::Circulant { sqrt_eig, fft } => {
                let mut buf: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..n].iter().map(|c| self.scale * c.re).collect()
            }
            Kernel::Cholesky { lower } => {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n)
                    .map(|i| {
                        let row = &lower[i * n..i * n + i + 1];
                        self.scale * row.iter().zip(&z).map(|(l, z)| l * z).sum::<f64>()
                    })
                    .collect()
            }
        };
        FbmIncrementBlock::new(self.dt, increments)
    }
}

fn circulant_kernel(h: f64, n: usize) -> Result<Kernel> {
    // Even circulant of size 2(n-1) whose leading n x n block is the fGn Toeplitz matrix.
    let size = 2 * (n - 1);
    let mut row: Vec<Complex<f64>> = (0..size)
        .map(|j| {
            let lag = if j < n { j } else { size - j };
            Complex::new(unit_fgn_autocovariance(h, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);
    let max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    let mut sqrt_eig = Vec::with_capacity(size);
    for c in &row {
        let mut lambda = c.re;
        if lambda < 0.0 {
            if lambda < -CIRCULANT_CLAMP * max {
                return Err(Error::CirculantEmbeddingIndefinite {
                    eigenvalue: lambda,
                    max,
                });
            }
            lambda = 0.0;
        }
        sqrt_eig.push((lambda / size as f64).sqrt());
    }
    Ok(Kernel::Circulant { sqrt_eig, fft })
}

fn cholesky_kernel(h: f64, n: usize) -> Result<Kernel> {
    if n > MAX_CHOLESKY_STEPS {
        return Err(invalid(
            "n_steps",
            format!("Cholesky generation is limited to {MAX_CHOLESKY_STEPS} steps, got {n}"),
        ));
    }
    let gamma: Vec<f64> = (0..n).map(|k| unit_fgn_autocovariance(h, k)).collect();
    let mut lower = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| lower[i * n + k] * lower[j * n + k]).sum();
            let a = gamma[i - j] - dot;
            if i == j {
                if a <= 0.0 {
                    return Err(Error::CholeskyNotPD { row: i });
                }
                lower[i * n + i] = a.sqrt();
            } else {
                lower[i * n + j] = a / lower[j * n + j];
            }
        }
    }
    Ok(Kernel::Cholesky { lower })
}

/// One-shot convenience around [`FbmGenerator`].
pub fn generate_block<R: Rng + ?Sized>(
    h: HurstParam,
    n_steps: usize,
    dt: f64,
    method: GeneratorMethod,
    rng: &mut R,
) -> Result<FbmIncrementBlock> {
    Ok(FbmGenerator::new(h, n_steps, dt, method)?.sample(rng))
}

/// Sums runs of `factor` consecutive increments: the same path seen on a grid
/// `factor` times coarser.
pub fn aggregate_to_coarser(block: &FbmIncrementBlock, factor: usize) -> Result<FbmIncrementBlock> {
    let n = block.n_steps();
    if factor == 0 || n % factor != 0 {
        return Err(Error::NonDivisibleFactor { factor, n_steps: n });
    }
    let increments = block
        .increments
        .chunks_exact(factor)
        .map(|c| c.iter().sum())
        .collect();
    Ok(FbmIncrementBlock::new(block.dt * factor as f64, increments))
}
