//! The Q-cylindrical fBm field `B^H(t, x) = sum_k sqrt(lambda_k) beta^H_k(t) e_k(x)`
//! truncated to tensor cosine modes, and its per-step nodal increments.
//!
//! On the structured mesh the mode evaluations factor into 1D tables, so one
//! increment costs two small dense products instead of `modes x nodes` work.

use crate::error::{invalid, Error, Result};
use crate::fbm::FbmIncrementBlock;
use crate::spatial::Mesh;

/// `e_i(x)` on `[0, length]`: `sqrt(1/L)` for `i = 0`, else `sqrt(2/L) cos(i pi x / L)`.
pub fn cosine_eigenfunction(i: usize, length: f64, x: f64) -> f64 {
    if i == 0 {
        (1.0 / length).sqrt()
    } else {
        (2.0 / length).sqrt() * (i as f64 * std::f64::consts::PI * x / length).cos()
    }
}

/// Covariance eigenvalue `(i^2 + j^2)^{-(beta + delta)}`; undefined at `(0, 0)`.
pub fn mode_eigenvalue(i: usize, j: usize, beta: f64, delta: f64) -> f64 {
    debug_assert!(i + j > 0);
    ((i * i + j * j) as f64).powf(-(beta + delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub i: usize,
    pub j: usize,
    pub lambda: f64,
}

/// Truncated eigenpairs of the noise covariance, evaluated on a mesh.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    modes: Vec<Mode>,
    lengths: (f64, f64),
    beta: f64,
    delta: f64,
    n_per_dim: usize,
    /// `table_x[a * n_per_dim + i] = e_i^{(1)}(x_a)` over grid columns.
    table_x: Vec<f64>,
    table_y: Vec<f64>,
    grid: (usize, usize),
}

impl SpectralBasis {
    pub fn build(l1: f64, l2: f64, beta: f64, delta: f64, n_per_dim: usize, mesh: &Mesh) -> Result<Self> {
        if n_per_dim < 1 {
            return Err(invalid("n_modes_per_dim", "must be at least 1"));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid("beta", format!("must lie in (0, 1], got {beta}")));
        }
        if !(delta > 0.0) {
            return Err(invalid("delta", format!("must be positive, got {delta}")));
        }
        let mut modes: Vec<Mode> = (0..n_per_dim)
            .flat_map(|i| (0..n_per_dim).map(move |j| (i, j)))
            .filter(|&(i, j)| i + j > 0)
            .map(|(i, j)| Mode {
                i,
                j,
                lambda: mode_eigenvalue(i, j, beta, delta),
            })
            .collect();
        // Stable sort keeps (i, j) lexicographic order among equal eigenvalues.
        modes.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));

        let xs = mesh.grid_x();
        let ys = mesh.grid_y();
        let table = |coords: &[f64], len: f64| -> Vec<f64> {
            coords
                .iter()
                .flat_map(|&x| (0..n_per_dim).map(move |i| cosine_eigenfunction(i, len, x)))
                .collect()
        };
        Ok(Self {
            table_x: table(&xs, l1),
            table_y: table(&ys, l2),
            grid: (xs.len(), ys.len()),
            modes,
            lengths: (l1, l2),
            beta,
            delta,
            n_per_dim,
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lengths(&self) -> (f64, f64) {
        self.lengths
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_per_dim(&self) -> usize {
        self.n_per_dim
    }

    /// Sum of the included eigenvalues.
    pub fn trace(&self) -> f64 {
        self.modes.iter().map(|m| m.lambda).sum()
    }

    /// `e_{i,j}` at every mesh node, in mesh node order.
    pub fn node_values(&self, mode: usize) -> Vec<f64> {
        let Mode { i, j, .. } = self.modes[mode];
        let (nxp, nyp) = self.grid;
        let n = self.n_per_dim;
        let mut out = Vec::with_capacity(nxp * nyp);
        for b in 0..nyp {
            let ey = self.table_y[b * n + j];
            for a in 0..nxp {
                out.push(self.table_x[a * n + i] * ey);
            }
        }
        out
    }

    /// Nodal values of `sum_k coef_k e_k`, with `coef` indexed like [`Self::modes`].
    pub fn synthesize(&self, coef: &[f64]) -> Vec<f64> {
        assert_eq!(coef.len(), self.modes.len());
        let n = self.n_per_dim;
        let (nxp, nyp) = self.grid;
        let mut w = vec![0.0; n * n];
        for (m, &c) in self.modes.iter().zip(coef) {
            w[m.i * n + m.j] += c;
        }
        // tmp[b][i] = sum_j w[i][j] e_j(y_b)
        let mut tmp = vec![0.0; nyp * n];
        for b in 0..nyp {
            let ey = &self.table_y[b * n..(b + 1) * n];
            for i in 0..n {
                let wi = &w[i * n..(i + 1) * n];
                tmp[b * n + i] = wi.iter().zip(ey).map(|(a, e)| a * e).sum();
            }
        }
        let mut out = vec![0.0; nxp * nyp];
        for b in 0..nyp {
            let t = &tmp[b * n..(b + 1) * n];
            for a in 0..nxp {
                let ex = &self.table_x[a * n..(a + 1) * n];
                out[b * nxp + a] = t.iter().zip(ex).map(|(a, e)| a * e).sum();
            }
        }
        out
    }
}

/// Nodal noise increment `P_h phi(t_m) Delta B^H_m` for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrementVector {
    pub values: Vec<f64>,
    pub t_index: usize,
}

/// `b * sum_k sqrt(lambda_k) Delta beta_{k,m} e_k` at the nodes; `blocks[k]`
/// belongs to `basis.modes()[k]`.
pub fn noise_increment(
    basis: &SpectralBasis,
    blocks: &[FbmIncrementBlock],
    m: usize,
    b_amplitude: f64,
) -> Result<NoiseIncrementVector> {
    if blocks.len() != basis.len() {
        return Err(invalid(
            "fbm_blocks",
            format!("{} blocks for {} modes", blocks.len(), basis.len()),
        ));
    }
    let mut coef = Vec::with_capacity(basis.len());
    for (mode, block) in basis.modes().iter().zip(blocks) {
        let inc = block.get(m).ok_or(Error::StepIndexOutOfRange {
            index: m,
            len: block.n_steps(),
        })?;
        coef.push(b_amplitude * mode.lambda.sqrt() * inc);
    }
    Ok(NoiseIncrementVector {
        values: basis.synthesize(&coef),
        t_index: m,
    })
}
