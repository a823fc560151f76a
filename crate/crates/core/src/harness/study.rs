//! Coupled-path Monte Carlo convergence studies.
//!
//! Every sample draws its fBm mode paths and jump amplitudes once on the
//! reference grid. Coarser time levels see the same paths through
//! aggregation; coarser meshes see the same modes evaluated at their nodes.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::spec::{steps_between, ExperimentSpec, Reaction, UpwindMode};
use super::table::{root_mean_square, Abscissa, ErrorTable};
use crate::error::{Error, Result};
use crate::fbm::{aggregate_to_coarser, FbmGenerator, FbmIncrementBlock, GeneratorMethod, MAX_CHOLESKY_STEPS};
use crate::jumps::{JumpConfig, JumpPath};
use crate::matfunc::KrylovConfig;
use crate::noise::SpectralBasis;
use crate::rng;
use crate::spatial::assembly::UPWIND_PECLET_THRESHOLD;
use crate::spatial::{assemble_operator, build_mesh, cell_peclet, solve_darcy, Diffusion, DiscreteOperator, LogPermeability, Mesh};
use crate::steppers::{
    run_trajectory, LinearReaction, NoiseSource, Nonlinearity, SaturatingRational, SchemeConfig, SemilinearProblem,
};

/// Mesh-dependent data shared by all samples.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub op: Arc<DiscreteOperator>,
    pub basis: SpectralBasis,
    pub problem: SemilinearProblem,
    pub jump: JumpConfig,
    pub peclet: f64,
}

/// The log-permeability frozen by the experiment's permeability sub-seed.
pub fn frozen_permeability(spec: &ExperimentSpec) -> Result<LogPermeability> {
    let mut r = rng::derive(spec.seed, &[rng::tag::PERMEABILITY]);
    LogPermeability::sample(spec.lengths, spec.permeability_modes, spec.permeability_sigma, &mut r)
}

/// Resolves [`UpwindMode::Auto`] from the cell Péclet number on the finest mesh.
pub fn resolve_upwind(spec: &ExperimentSpec, perm: &LogPermeability) -> Result<bool> {
    Ok(match spec.upwind {
        UpwindMode::On => true,
        UpwindMode::Off => false,
        UpwindMode::Auto => {
            let mesh = build_mesh(spec.lengths.0, spec.lengths.1, spec.mesh.0, spec.mesh.1)?;
            let vel = solve_darcy(&mesh, &perm.on_mesh(&mesh))?;
            cell_peclet(&mesh, &Diffusion::isotropic(spec.diffusion), &vel) > UPWIND_PECLET_THRESHOLD
        }
    })
}

pub fn discretize(
    spec: &ExperimentSpec,
    cells: (usize, usize),
    perm: &LogPermeability,
    upwind: bool,
) -> Result<Discretization> {
    let (l1, l2) = spec.lengths;
    let mesh = build_mesh(l1, l2, cells.0, cells.1)?;
    let vel = solve_darcy(&mesh, &perm.on_mesh(&mesh))?;
    let diffusion = Diffusion::isotropic(spec.diffusion);
    let peclet = cell_peclet(&mesh, &diffusion, &vel);
    let op = Arc::new(assemble_operator(&mesh, &diffusion, &vel, spec.c0, upwind)?);
    let basis = SpectralBasis::build(l1, l2, spec.beta, spec.delta, spec.modes_per_dim, &mesh)?;
    let f: Arc<dyn Nonlinearity> = match spec.reaction {
        Reaction::Saturating => Arc::new(SaturatingRational),
        Reaction::None => Arc::new(LinearReaction(0.0)),
    };
    let x0 = vec![0.0; mesh.node_count()];
    let problem = SemilinearProblem::on_mesh(op.clone(), &mesh, f, &x0);
    let jump = if spec.jump_intensity > 0.0 {
        JumpConfig::with_default_profile(&mesh, spec.jump_intensity, spec.jump_mark_scale)?
    } else {
        JumpConfig::disabled()
    };
    Ok(Discretization {
        mesh,
        op,
        basis,
        problem,
        jump,
        peclet,
    })
}

/// Generator on the reference grid; falls back to Cholesky if the circulant
/// embedding turns out indefinite.
pub fn reference_generator(spec: &ExperimentSpec) -> Result<FbmGenerator> {
    let n = spec.n_steps_reference();
    let method = GeneratorMethod::for_hurst(spec.hurst);
    match FbmGenerator::new(spec.hurst, n, spec.dt_reference, method) {
        Err(Error::CirculantEmbeddingIndefinite { .. }) if n <= MAX_CHOLESKY_STEPS => {
            FbmGenerator::new(spec.hurst, n, spec.dt_reference, GeneratorMethod::Cholesky)
        }
        other => other,
    }
}

/// Mode paths of one sample. Streams are keyed by the mode indices `(i, j)`,
/// so a path does not change when the truncation level does.
pub fn sample_blocks(spec: &ExperimentSpec, gen: &FbmGenerator, basis: &SpectralBasis, sample: usize) -> Vec<FbmIncrementBlock> {
    if spec.amplitude == 0.0 {
        return Vec::new();
    }
    basis
        .modes()
        .iter()
        .map(|m| {
            let mut r = rng::derive(spec.seed, &[rng::tag::FBM_MODE, sample as u64, m.i as u64, m.j as u64]);
            gen.sample(&mut r)
        })
        .collect()
}

pub fn sample_jumps(spec: &ExperimentSpec, jump: &JumpConfig, sample: usize) -> Option<JumpPath> {
    jump.is_active().then(|| {
        let mut r = rng::derive(spec.seed, &[rng::tag::JUMPS, sample as u64]);
        JumpPath::sample(jump, spec.n_steps_reference(), spec.dt_reference, &mut r)
    })
}

fn scheme_config(spec: &ExperimentSpec, disc: &Discretization, dt: f64, n_steps: usize) -> SchemeConfig {
    let mut cfg = SchemeConfig::new(spec.scheme, dt, n_steps);
    cfg.krylov = KrylovConfig {
        tolerance: spec.krylov_tolerance,
        ..KrylovConfig::default()
    };
    cfg.jump = disc.jump.clone();
    cfg
}

/// Final free-dof state of one path on `disc` with step `dt`, using the
/// reference-grid paths aggregated to `dt`.
pub fn solve_path(
    spec: &ExperimentSpec,
    disc: &Discretization,
    blocks: &[FbmIncrementBlock],
    jumps: Option<&JumpPath>,
    dt: f64,
) -> Result<Vec<f64>> {
    let factor = steps_between(dt, spec.dt_reference)
        .ok_or_else(|| Error::InvalidExperiment(format!("dt {dt} is not a multiple of dt_reference")))?;
    let n_steps = steps_between(spec.final_time, dt)
        .ok_or_else(|| Error::InvalidExperiment(format!("dt {dt} does not divide the final time")))?;
    let coarse: Vec<FbmIncrementBlock> = if factor == 1 {
        blocks.to_vec()
    } else {
        blocks.iter().map(|b| aggregate_to_coarser(b, factor)).collect::<Result<_>>()?
    };
    let coarse_jumps = match jumps {
        Some(p) => Some(p.aggregate(factor).ok_or(Error::NonDivisibleFactor {
            factor,
            n_steps: p.amplitudes.len(),
        })?),
        None => None,
    };
    let cfg = scheme_config(spec, disc, dt, n_steps);
    let noise = (!coarse.is_empty()).then_some(NoiseSource {
        basis: &disc.basis,
        blocks: &coarse,
        amplitude: spec.amplitude,
    });
    Ok(run_trajectory(&disc.problem, &cfg, noise, coarse_jumps.as_ref())?.coefficients)
}

fn difference_norm(op: &DiscreteOperator, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    op.mass_norm(&d)
}

/// Runs `per_sample` over all samples in parallel. On failure returns the
/// successful prefix together with the first error.
fn run_samples<F>(n: usize, per_sample: F) -> (Vec<Vec<f64>>, Option<Error>)
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let results: Vec<Result<Vec<f64>>> = (0..n).into_par_iter().map(&per_sample).collect();
    let mut ok = Vec::with_capacity(n);
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => return (ok, Some(e)),
        }
    }
    (ok, None)
}

fn rms_columns(per_sample: &[Vec<f64>], n_cols: usize) -> Vec<f64> {
    (0..n_cols)
        .map(|c| {
            let col: Vec<f64> = per_sample.iter().map(|s| s[c]).collect();
            root_mean_square(&col)
        })
        .collect()
}

fn finish(
    spec: &ExperimentSpec,
    table: ErrorTable,
    study: &str,
    start: Instant,
    extra: Vec<(&str, String)>,
    failure: Option<Error>,
) -> Result<ErrorTable> {
    let mut t = table
        .with_metadata("study", study)
        .with_metadata("version", concat!("v", env!("CARGO_PKG_VERSION")))
        .with_metadata("spec_hash", spec.hash());
    for line in spec.echo().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            t = t.with_metadata(&format!("spec.{k}"), v);
        }
    }
    for (k, v) in extra {
        t = t.with_metadata(k, v);
    }
    let order = t.global_order.map_or_else(|| "none".to_string(), |o| format!("{o:.6}"));
    let used = t.samples_used;
    t = t
        .with_metadata("global_order", order)
        .with_metadata("samples_used", used)
        .with_metadata("status", failure.as_ref().map_or("complete".to_string(), |e| format!("partial: {e}")))
        .with_metadata("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
    if let Some(dir) = &spec.out_dir {
        t.write(dir, study)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(t),
    }
}

/// Temporal self-convergence: the same scheme at `dt_reference` is the
/// reference; errors are M-weighted L2 norms at the final time.
pub fn run_temporal_study(spec: &ExperimentSpec) -> Result<ErrorTable> {
    spec.validate_temporal()?;
    let start = Instant::now();
    let perm = frozen_permeability(spec)?;
    let upwind = resolve_upwind(spec, &perm)?;
    let disc = discretize(spec, spec.mesh, &perm, upwind)?;
    let gen = reference_generator(spec)?;
    let levels = &spec.dt_levels;

    let (per_sample, failure) = run_samples(spec.n_samples, |s| {
        let blocks = sample_blocks(spec, &gen, &disc.basis, s);
        let jumps = sample_jumps(spec, &disc.jump, s);
        let reference = solve_path(spec, &disc, &blocks, jumps.as_ref(), spec.dt_reference)?;
        levels
            .iter()
            .map(|&dt| {
                let w = solve_path(spec, &disc, &blocks, jumps.as_ref(), dt)?;
                Ok(difference_norm(&disc.op, &w, &reference))
            })
            .collect()
    });
    let rms = rms_columns(&per_sample, levels.len());
    let points = if per_sample.is_empty() {
        Vec::new()
    } else {
        levels.iter().copied().zip(rms).collect()
    };
    let table = ErrorTable::from_errors(Abscissa::Dt, points, per_sample.len());
    let extra = vec![
        ("upwind", upwind.to_string()),
        ("cell_peclet", format!("{:.6}", disc.peclet)),
        ("mesh_note", format!("{}x{} finite element mesh (resolution not given by the source experiment)", spec.mesh.0, spec.mesh.1)),
        ("fbm_method", gen.method().to_string()),
        ("noise_modes", disc.basis.len().to_string()),
    ];
    finish(spec, table, "temporal", start, extra, failure)
}

/// Spatial self-convergence at fixed `dt_reference`: the finest mesh is the
/// reference and coarser solutions are compared at their own nodes.
pub fn run_spatial_study(spec: &ExperimentSpec) -> Result<ErrorTable> {
    spec.validate_spatial()?;
    let start = Instant::now();
    let perm = frozen_permeability(spec)?;
    let upwind = resolve_upwind(spec, &perm)?;
    let meshes = spec.spatial_meshes();
    let discs: Vec<Discretization> = meshes
        .iter()
        .map(|&c| discretize(spec, c, &perm, upwind))
        .collect::<Result<_>>()?;
    let (fine, coarse) = discs.split_last().expect("at least three levels");
    let gen = reference_generator(spec)?;

    let (per_sample, failure) = run_samples(spec.n_samples, |s| {
        let blocks = sample_blocks(spec, &gen, &fine.basis, s);
        let jumps = sample_jumps(spec, &fine.jump, s);
        let reference = fine.op.expand(&solve_path(spec, fine, &blocks, jumps.as_ref(), spec.dt_reference)?);
        coarse
            .iter()
            .map(|d| {
                let w = solve_path(spec, d, &blocks, jumps.as_ref(), spec.dt_reference)?;
                let restricted = d
                    .mesh
                    .restrict_from(&fine.mesh, &reference)
                    .ok_or_else(|| Error::InvalidExperiment("meshes are not nested".into()))?;
                Ok(difference_norm(&d.op, &w, &d.op.split(&restricted)))
            })
            .collect()
    });
    let rms = rms_columns(&per_sample, coarse.len());
    let points = if per_sample.is_empty() {
        Vec::new()
    } else {
        coarse.iter().map(|d| d.mesh.h()).zip(rms).collect()
    };
    let table = ErrorTable::from_errors(Abscissa::MeshSize, points, per_sample.len());
    let names: Vec<String> = meshes.iter().map(|m| format!("{}x{}", m.0, m.1)).collect();
    let extra = vec![
        ("upwind", upwind.to_string()),
        ("cell_peclet_finest", format!("{:.6}", fine.peclet)),
        ("meshes", names.join(",")),
        ("fbm_method", gen.method().to_string()),
        ("noise_modes", fine.basis.len().to_string()),
    ];
    finish(spec, table, "spatial", start, extra, failure)
}

/// One solution field at the final time on `spec.mesh` with step `dt`.
pub fn run_sample(spec: &ExperimentSpec, sample: usize, dt: f64) -> Result<(Discretization, Vec<f64>)> {
    spec.validate()?;
    let perm = frozen_permeability(spec)?;
    let upwind = resolve_upwind(spec, &perm)?;
    let disc = discretize(spec, spec.mesh, &perm, upwind)?;
    let gen = reference_generator(spec)?;
    let blocks = sample_blocks(spec, &gen, &disc.basis, sample);
    let jumps = sample_jumps(spec, &disc.jump, sample);
    let w = solve_path(spec, &disc, &blocks, jumps.as_ref(), dt)?;
    let nodal = disc.op.expand(&w);
    Ok((disc, nodal))
}

/// `node_id,x,y,value` per node.
pub fn nodal_csv(mesh: &Mesh, values: &[f64]) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("node_id,x,y,value\n");
    for (i, (p, v)) in mesh.nodes().iter().zip(values).enumerate() {
        let _ = writeln!(s, "{i},{:.17e},{:.17e},{v:.17e}", p[0], p[1]);
    }
    s
}

pub fn write_nodal_csv(path: &Path, mesh: &Mesh, values: &[f64]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, nodal_csv(mesh, values))?;
    Ok(())
}
