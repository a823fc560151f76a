//! Experiment description, defaults and the `key = value` config format.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::fbm::HurstParam;
use crate::steppers::Scheme;

/// Whether the advection term gets edge-based upwind diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpwindMode {
    /// Upwind when the cell Péclet number of the finest mesh exceeds 2.
    Auto,
    On,
    Off,
}

impl FromStr for UpwindMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "on" | "true" | "yes" | "1" => Ok(Self::On),
            "off" | "false" | "no" | "0" => Ok(Self::Off),
            other => Err(invalid("upwind", format!("`{other}` is not one of auto|on|off"))),
        }
    }
}

impl std::fmt::Display for UpwindMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::On => "on",
            Self::Off => "off",
        })
    }
}

/// Reaction term of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    /// `f(z) = z / (1 + |z|)`.
    Saturating,
    None,
}

impl FromStr for Reaction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "saturating" => Ok(Self::Saturating),
            "none" => Ok(Self::None),
            other => Err(invalid("reaction", format!("`{other}` is not one of saturating|none"))),
        }
    }
}

impl std::fmt::Display for Reaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Saturating => "saturating",
            Self::None => "none",
        })
    }
}

/// One convergence experiment. `mesh` is the finest mesh; the spatial study
/// halves it `spatial_levels - 1` times.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scheme: Scheme,
    pub hurst: HurstParam,
    pub beta: f64,
    pub delta: f64,
    /// Constant noise amplitude `b`.
    pub amplitude: f64,
    pub modes_per_dim: usize,
    pub lengths: (f64, f64),
    pub diffusion: f64,
    pub mesh: (usize, usize),
    pub spatial_levels: usize,
    pub dt_levels: Vec<f64>,
    pub dt_reference: f64,
    pub final_time: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub permeability_sigma: f64,
    pub permeability_modes: usize,
    pub upwind: UpwindMode,
    pub reaction: Reaction,
    pub c0: f64,
    pub jump_intensity: f64,
    pub jump_mark_scale: f64,
    pub krylov_tolerance: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::Setd1,
            hurst: HurstParam::new(0.75).expect("valid"),
            beta: 1.0,
            delta: 0.001,
            amplitude: 2.0,
            modes_per_dim: 32,
            lengths: (3.0, 2.0),
            diffusion: 0.01,
            mesh: (48, 32),
            spatial_levels: 3,
            dt_levels: (4..=8).map(|k| 2f64.powi(-k)).collect(),
            dt_reference: 1.0 / 1024.0,
            final_time: 1.0,
            n_samples: 50,
            seed: 2024,
            permeability_sigma: 1.0,
            permeability_modes: 6,
            upwind: UpwindMode::Auto,
            reaction: Reaction::Saturating,
            c0: 1.0,
            jump_intensity: 0.0,
            jump_mark_scale: 0.5,
            krylov_tolerance: 1e-8,
            out_dir: None,
        }
    }
}

/// Parses `1/16`, `2^-4`, `0.0625` or `6.25e-2`.
pub fn parse_dt(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || invalid("dt", format!("cannot parse `{s}`"));
    let v = if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        a / b
    } else if let Some((a, b)) = s.split_once('^') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        a.powf(b)
    } else {
        s.parse().map_err(|_| bad())?
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got `{s}`")));
    }
    Ok(v)
}

pub fn parse_dt_list(s: &str) -> Result<Vec<f64>> {
    s.split([',', ' '])
        .filter(|t| !t.trim().is_empty())
        .map(parse_dt)
        .collect()
}

/// Parses `48x32`, `48 32` or `48,32`.
pub fn parse_mesh(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s
        .split(|c: char| c == 'x' || c == 'X' || c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    let bad = || invalid("mesh", format!("expected `NX NY`, got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let nx = parts[0].parse().map_err(|_| bad())?;
    let ny = parts[1].parse().map_err(|_| bad())?;
    Ok((nx, ny))
}

fn parse_num<T: FromStr>(name: &'static str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| invalid(name, format!("cannot parse `{v}`")))
}

/// Integer steps `span / dt` when `dt` divides `span` up to round-off.
pub fn steps_between(span: f64, dt: f64) -> Option<usize> {
    let r = span / dt;
    let n = r.round();
    ((r - n).abs() <= 1e-9 * r.max(1.0) && n >= 1.0).then_some(n as usize)
}

impl ExperimentSpec {
    /// Applies one `key = value` setting. Keys match the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "scheme" => self.scheme = v.parse()?,
            "hurst" => self.hurst = HurstParam::new(parse_num("hurst", v)?)?,
            "beta" => self.beta = parse_num("beta", v)?,
            "delta" => self.delta = parse_num("delta", v)?,
            "amplitude" => self.amplitude = parse_num("amplitude", v)?,
            "modes" => self.modes_per_dim = parse_num("modes", v)?,
            "length-x" => self.lengths.0 = parse_num("length-x", v)?,
            "length-y" => self.lengths.1 = parse_num("length-y", v)?,
            "diffusion" => self.diffusion = parse_num("diffusion", v)?,
            "mesh" => self.mesh = parse_mesh(v)?,
            "spatial-levels" => self.spatial_levels = parse_num("spatial-levels", v)?,
            "dt-levels" => self.dt_levels = parse_dt_list(v)?,
            "dt-ref" => self.dt_reference = parse_dt(v)?,
            "final-time" => self.final_time = parse_num("final-time", v)?,
            "samples" => self.n_samples = parse_num("samples", v)?,
            "seed" => self.seed = parse_num("seed", v)?,
            "permeability-sigma" => self.permeability_sigma = parse_num("permeability-sigma", v)?,
            "permeability-modes" => self.permeability_modes = parse_num("permeability-modes", v)?,
            "upwind" => self.upwind = v.parse()?,
            "reaction" => self.reaction = v.parse()?,
            "c0" => self.c0 = parse_num("c0", v)?,
            "jump-intensity" => self.jump_intensity = parse_num("jump-intensity", v)?,
            "jump-mark-scale" => self.jump_mark_scale = parse_num("jump-mark-scale", v)?,
            "krylov-tol" => self.krylov_tolerance = parse_num("krylov-tol", v)?,
            "out" => self.out_dir = Some(PathBuf::from(v)),
            other => return Err(Error::InvalidExperiment(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a config text: one `key = value` per line, `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidExperiment(format!("config line {}: expected `key = value`", no + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn n_steps_reference(&self) -> usize {
        steps_between(self.final_time, self.dt_reference).unwrap_or(0)
    }

    /// Checks the temporal study invariants.
    pub fn validate_temporal(&self) -> Result<()> {
        self.validate()?;
        if self.dt_levels.is_empty() {
            return Err(Error::InvalidExperiment("no dt levels".into()));
        }
        for w in self.dt_levels.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidExperiment("dt levels must be strictly decreasing".into()));
            }
            if steps_between(w[0], w[1]).is_none_or(|r| !r.is_power_of_two()) {
                return Err(Error::InvalidExperiment(format!(
                    "dt levels must be dyadic: {} to {}",
                    w[0], w[1]
                )));
            }
        }
        for &dt in &self.dt_levels {
            if dt < self.dt_reference * (1.0 - 1e-12) || steps_between(dt, self.dt_reference).is_none() {
                return Err(Error::InvalidExperiment(format!(
                    "dt_reference {} does not divide dt level {dt}",
                    self.dt_reference
                )));
            }
            if steps_between(self.final_time, dt).is_none() {
                return Err(Error::InvalidExperiment(format!(
                    "dt level {dt} does not divide the final time {}",
                    self.final_time
                )));
            }
        }
        Ok(())
    }

    /// Meshes of the spatial study, coarsest first.
    pub fn spatial_meshes(&self) -> Vec<(usize, usize)> {
        (0..self.spatial_levels)
            .rev()
            .map(|k| (self.mesh.0 >> k, self.mesh.1 >> k))
            .collect()
    }

    pub fn validate_spatial(&self) -> Result<()> {
        self.validate()?;
        if self.spatial_levels < 3 {
            return Err(Error::InvalidExperiment(format!(
                "spatial study needs at least 3 nested meshes, got {}",
                self.spatial_levels
            )));
        }
        let meshes = self.spatial_meshes();
        for w in meshes.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidExperiment(format!(
                    "identical meshes {}x{} would give a zero error row",
                    w[0].0, w[0].1
                )));
            }
        }
        let coarsest = meshes[0];
        let k = self.spatial_levels as u32 - 1;
        if coarsest.0 == 0 || coarsest.1 == 0 || coarsest.0 << k != self.mesh.0 || coarsest.1 << k != self.mesh.1 {
            return Err(Error::InvalidExperiment(format!(
                "mesh {}x{} cannot be halved {k} times",
                self.mesh.0, self.mesh.1
            )));
        }
        Ok(())
    }

    /// Checks the settings shared by every study.
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(invalid("samples", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid("beta", format!("must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.delta > 0.0) {
            return Err(invalid("delta", "must be positive"));
        }
        if self.modes_per_dim < 1 {
            return Err(invalid("modes", "must be at least 1"));
        }
        if !(self.diffusion > 0.0) {
            return Err(invalid("diffusion", "must be positive"));
        }
        if self.mesh.0 < 1 || self.mesh.1 < 1 {
            return Err(invalid("mesh", "needs at least one cell per direction"));
        }
        if !(self.lengths.0 > 0.0 && self.lengths.1 > 0.0) {
            return Err(invalid("length", "domain lengths must be positive"));
        }
        if !(self.final_time > 0.0) {
            return Err(invalid("final-time", "must be positive"));
        }
        if steps_between(self.final_time, self.dt_reference).is_none() {
            return Err(Error::InvalidExperiment(format!(
                "dt_reference {} does not divide the final time {}",
                self.dt_reference, self.final_time
            )));
        }
        if !(self.jump_intensity >= 0.0) {
            return Err(invalid("jump-intensity", "must be nonnegative"));
        }
        if !(self.krylov_tolerance > 0.0) {
            return Err(invalid("krylov-tol", "must be positive"));
        }
        Ok(())
    }

    /// Canonical `key = value` listing of every field except the output path.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let dts: Vec<String> = self.dt_levels.iter().map(|d| format!("{d:e}")).collect();
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "hurst = {}", self.hurst.value());
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "amplitude = {}", self.amplitude);
        let _ = writeln!(s, "modes = {}", self.modes_per_dim);
        let _ = writeln!(s, "length-x = {}", self.lengths.0);
        let _ = writeln!(s, "length-y = {}", self.lengths.1);
        let _ = writeln!(s, "diffusion = {}", self.diffusion);
        let _ = writeln!(s, "mesh = {}x{}", self.mesh.0, self.mesh.1);
        let _ = writeln!(s, "spatial-levels = {}", self.spatial_levels);
        let _ = writeln!(s, "dt-levels = {}", dts.join(","));
        let _ = writeln!(s, "dt-ref = {:e}", self.dt_reference);
        let _ = writeln!(s, "final-time = {}", self.final_time);
        let _ = writeln!(s, "samples = {}", self.n_samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "permeability-sigma = {}", self.permeability_sigma);
        let _ = writeln!(s, "permeability-modes = {}", self.permeability_modes);
        let _ = writeln!(s, "upwind = {}", self.upwind);
        let _ = writeln!(s, "reaction = {}", self.reaction);
        let _ = writeln!(s, "c0 = {}", self.c0);
        let _ = writeln!(s, "jump-intensity = {}", self.jump_intensity);
        let _ = writeln!(s, "jump-mark-scale = {}", self.jump_mark_scale);
        let _ = writeln!(s, "krylov-tol = {:e}", self.krylov_tolerance);
        s
    }

    /// SHA-256 of [`Self::echo`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.echo().as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}
