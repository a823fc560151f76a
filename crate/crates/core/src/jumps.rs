//! Compensated compound Poisson increments `int z_0 N~(dz, dt)` over one step.
//!
//! Marks are `z_0(zeta) = mark_scale * zeta * mark_profile` with `zeta`
//! standard normal, so every increment is a scalar multiple of one fixed
//! spatial profile and the compensator vanishes (symmetric marks). Paths are
//! stored as those scalar amplitudes, which makes coarsening a plain sum.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{invalid, Result};
use crate::noise::cosine_eigenfunction;
use crate::spatial::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpConfig {
    /// Expected number of jumps per unit time.
    pub intensity: f64,
    pub mark_scale: f64,
    /// Spatial shape of the jumps at every mesh node.
    pub mark_profile: Vec<f64>,
    pub enabled: bool,
}

impl JumpConfig {
    pub fn disabled() -> Self {
        Self {
            intensity: 0.0,
            mark_scale: 0.0,
            mark_profile: Vec::new(),
            enabled: false,
        }
    }

    /// Profile `e_{1,0}`: the first nonconstant cosine mode along `x`.
    pub fn with_default_profile(mesh: &Mesh, intensity: f64, mark_scale: f64) -> Result<Self> {
        let (l1, l2) = mesh.lengths();
        let profile = mesh
            .nodes()
            .iter()
            .map(|p| cosine_eigenfunction(1, l1, p[0]) * cosine_eigenfunction(0, l2, p[1]))
            .collect();
        let cfg = Self {
            intensity,
            mark_scale,
            mark_profile: profile,
            enabled: intensity > 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            return Err(invalid("jump-intensity", "must be nonnegative and finite"));
        }
        if !self.mark_scale.is_finite() {
            return Err(invalid("jump-mark-scale", "must be finite"));
        }
        if self.mark_profile.iter().any(|v| !v.is_finite()) {
            return Err(invalid("jump-profile", "must be finite"));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.enabled && self.intensity > 0.0 && self.mark_scale != 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpIncrementVector {
    pub values: Vec<f64>,
    pub t_index: usize,
}

/// Scalar `mark_scale * sum_k zeta_k` for `K ~ Poisson(intensity * dt)` jumps.
pub fn jump_amplitude<R: Rng + ?Sized>(cfg: &JumpConfig, dt: f64, rng: &mut R) -> f64 {
    if !cfg.is_active() {
        return 0.0;
    }
    let count = Poisson::new(cfg.intensity * dt)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0);
    let sum: f64 = (0..count).map(|_| rng.sample::<f64, _>(StandardNormal)).sum();
    cfg.mark_scale * sum
}

/// One compensated jump increment over a step of length `dt`.
pub fn jump_increment<R: Rng + ?Sized>(cfg: &JumpConfig, dt: f64, rng: &mut R) -> Result<JumpIncrementVector> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    let a = jump_amplitude(cfg, dt, rng);
    Ok(JumpIncrementVector {
        values: cfg.mark_profile.iter().map(|p| a * p).collect(),
        t_index: 0,
    })
}

/// Jump amplitudes of one path on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    pub dt: f64,
    pub amplitudes: Vec<f64>,
}

impl JumpPath {
    pub fn sample<R: Rng + ?Sized>(cfg: &JumpConfig, n_steps: usize, dt: f64, rng: &mut R) -> Self {
        Self {
            dt,
            amplitudes: (0..n_steps).map(|_| jump_amplitude(cfg, dt, rng)).collect(),
        }
    }

    pub fn zeros(n_steps: usize, dt: f64) -> Self {
        Self {
            dt,
            amplitudes: vec![0.0; n_steps],
        }
    }

    /// Sum of `factor` consecutive steps; `None` if `factor` does not divide the length.
    pub fn aggregate(&self, factor: usize) -> Option<Self> {
        if factor == 0 || self.amplitudes.len() % factor != 0 {
            return None;
        }
        Some(Self {
            dt: self.dt * factor as f64,
            amplitudes: self.amplitudes.chunks_exact(factor).map(|c| c.iter().sum()).collect(),
        })
    }

    pub fn increment(&self, cfg: &JumpConfig, m: usize) -> JumpIncrementVector {
        let a = self.amplitudes.get(m).copied().unwrap_or(0.0);
        JumpIncrementVector {
            values: cfg.mark_profile.iter().map(|p| a * p).collect(),
            t_index: m,
        }
    }
}
