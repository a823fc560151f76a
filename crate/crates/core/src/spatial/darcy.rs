//! Darcy velocity `q = -k grad p` with `div q = 0`, `p = 1` at `x = 0`,
//! `p = 0` at `x = L1` and no flux through the top and bottom walls.

use rand::Rng;
use rand_distr::StandardNormal;

use super::assembly::{assemble_stiffness, Diffusion};
use super::mesh::Mesh;
use crate::error::{invalid, Result};
use crate::matfunc::{conjugate_gradient, SolverConfig};
use crate::noise::cosine_eigenfunction;

/// Piecewise constant velocity, one vector per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    q: Vec<[f64; 2]>,
}

impl VelocityField {
    pub fn new(q: Vec<[f64; 2]>) -> Self {
        Self { q }
    }

    pub fn uniform(mesh: &Mesh, q: [f64; 2]) -> Self {
        Self {
            q: vec![q; mesh.triangles().len()],
        }
    }

    pub fn per_triangle(&self) -> &[[f64; 2]] {
        &self.q
    }

    pub fn max_speed(&self) -> f64 {
        self.q.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// Weak divergence `sum_T |T| q_T . grad phi_i` at every node. Away from
    /// the two pressure boundaries it vanishes up to the solver tolerance.
    pub fn weak_divergence(&self, mesh: &Mesh) -> Vec<f64> {
        let mut out = vec![0.0; mesh.node_count()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let g = mesh.gradients(t);
            let a = mesh.area(t);
            let q = self.q[t];
            for (k, &i) in tri.iter().enumerate() {
                out[i] += a * (q[0] * g[k][0] + q[1] * g[k][1]);
            }
        }
        out
    }
}

/// Relative residual for the pressure solve.
pub const DARCY_TOLERANCE: f64 = 1e-12;

pub fn solve_darcy(mesh: &Mesh, permeability: &[f64]) -> Result<VelocityField> {
    if permeability.len() != mesh.triangles().len() {
        return Err(invalid("permeability", "one value per triangle required"));
    }
    if permeability.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(invalid("permeability", "must be positive and finite"));
    }
    let (l1, _) = mesh.lengths();
    let k = assemble_stiffness(mesh, &Diffusion::isotropic(1.0), Some(permeability));
    let n = mesh.node_count();
    let mut p = vec![0.0; n];
    let mut fixed = vec![false; n];
    for (i, node) in mesh.nodes().iter().enumerate() {
        if node[0] == 0.0 {
            p[i] = 1.0;
            fixed[i] = true;
        } else if node[0] == l1 {
            fixed[i] = true;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let dir: Vec<usize> = (0..n).filter(|&i| fixed[i]).collect();
    let pd: Vec<f64> = dir.iter().map(|&i| p[i]).collect();
    let rhs: Vec<f64> = k.select(&free, &dir).mul_vec(&pd).into_iter().map(|v| -v).collect();
    let cfg = SolverConfig {
        tolerance: DARCY_TOLERANCE,
        max_iterations: 20 * n.max(100),
    };
    let pf = conjugate_gradient(&k.select(&free, &free), &rhs, None, cfg)?;
    for (&i, v) in free.iter().zip(pf) {
        p[i] = v;
    }
    let q = (0..mesh.triangles().len())
        .map(|t| {
            let g = mesh.gradients(t);
            let tri = mesh.triangles()[t];
            let mut grad = [0.0; 2];
            for (k, &i) in tri.iter().enumerate() {
                grad[0] += p[i] * g[k][0];
                grad[1] += p[i] * g[k][1];
            }
            [-permeability[t] * grad[0], -permeability[t] * grad[1]]
        })
        .collect();
    Ok(VelocityField { q })
}

/// Log-normal permeability `k = exp(g)` with `g` a centered Gaussian cosine
/// series. The coefficients are drawn once, so the same field can be
/// evaluated on any mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPermeability {
    lengths: (f64, f64),
    sigma: f64,
    /// `(i, j, normalized weight, standard normal coefficient)`.
    terms: Vec<(usize, usize, f64, f64)>,
}

impl LogPermeability {
    /// Weights `(i^2 + j^2)^{-2}` over `{0..n}^2 \ (0,0)`, normalized to sum to 1,
    /// so the domain-averaged variance of `g` is `sigma^2`.
    pub fn sample<R: Rng + ?Sized>(
        lengths: (f64, f64),
        correlation_modes: usize,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(invalid("sigma", "must be nonnegative"));
        }
        let raw: Vec<(usize, usize, f64)> = (0..correlation_modes)
            .flat_map(|i| (0..correlation_modes).map(move |j| (i, j)))
            .filter(|&(i, j)| i + j > 0)
            .map(|(i, j)| (i, j, ((i * i + j * j) as f64).powi(-2)))
            .collect();
        let total: f64 = raw.iter().map(|r| r.2).sum();
        let terms = raw
            .into_iter()
            .map(|(i, j, w)| (i, j, w / total, rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Ok(Self { lengths, sigma, terms })
    }

    pub fn log_value(&self, p: [f64; 2]) -> f64 {
        let (l1, l2) = self.lengths;
        let amp = self.sigma * (l1 * l2).sqrt();
        amp * self
            .terms
            .iter()
            .map(|&(i, j, w, z)| w.sqrt() * z * cosine_eigenfunction(i, l1, p[0]) * cosine_eigenfunction(j, l2, p[1]))
            .sum::<f64>()
    }

    /// Pointwise variance of `g`, `sigma^2 L1 L2 sum_k w_k e_k(p)^2`.
    pub fn log_variance_at(&self, p: [f64; 2]) -> f64 {
        let (l1, l2) = self.lengths;
        self.sigma.powi(2)
            * l1
            * l2
            * self
                .terms
                .iter()
                .map(|&(i, j, w, _)| {
                    w * (cosine_eigenfunction(i, l1, p[0]) * cosine_eigenfunction(j, l2, p[1])).powi(2)
                })
                .sum::<f64>()
    }

    /// Permeability at the triangle centroids of `mesh`.
    pub fn on_mesh(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.triangles().len())
            .map(|t| self.log_value(mesh.centroid(t)).exp())
            .collect()
    }
}

/// One draw of the log-normal permeability at the centroids of `mesh`.
pub fn random_log_permeability<R: Rng + ?Sized>(
    mesh: &Mesh,
    correlation_modes: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(LogPermeability::sample(mesh.lengths(), correlation_modes, sigma, rng)?.on_mesh(mesh))
}
