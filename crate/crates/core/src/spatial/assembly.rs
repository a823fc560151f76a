//! P1 assembly of `A u = -div(D grad u) + q . grad u` (plus the shift
//! `c0 u`) with the nonhomogeneous Dirichlet data lifted out.

use super::darcy::VelocityField;
use super::mesh::Mesh;
use crate::error::{invalid, Error, Result};
use crate::matfunc::dense::banded_cholesky_succeeds;
use crate::matfunc::{CsrMatrix, TripletBuilder};

/// Diffusion tensor `[[d11, d12], [d12, d22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

impl Diffusion {
    pub fn isotropic(d: f64) -> Self {
        Self {
            d11: d,
            d12: 0.0,
            d22: d,
        }
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.d11 + self.d22);
        let rad = (0.25 * (self.d11 - self.d22).powi(2) + self.d12 * self.d12).sqrt();
        mean - rad
    }

    fn apply(&self, g: [f64; 2]) -> [f64; 2] {
        [self.d11 * g[0] + self.d12 * g[1], self.d12 * g[0] + self.d22 * g[1]]
    }
}

/// Consistent P1 mass matrix over all nodes.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.node_count();
    let mut b = TripletBuilder::new(n, n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(t);
        for (k, &i) in tri.iter().enumerate() {
            for (l, &j) in tri.iter().enumerate() {
                b.add(i, j, if k == l { a / 6.0 } else { a / 12.0 });
            }
        }
    }
    b.build()
}

/// Row-sum lumped mass over all nodes.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut out = vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let third = mesh.area(t) / 3.0;
        for &i in tri {
            out[i] += third;
        }
    }
    out
}

/// `int D grad phi_j . grad phi_i`, with per-triangle scalar coefficient.
pub fn assemble_stiffness(mesh: &Mesh, diffusion: &Diffusion, coefficient: Option<&[f64]>) -> CsrMatrix {
    let n = mesh.node_count();
    let mut b = TripletBuilder::new(n, n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(t) * coefficient.map_or(1.0, |c| c[t]);
        let g = mesh.gradients(t);
        for (k, &i) in tri.iter().enumerate() {
            for (l, &j) in tri.iter().enumerate() {
                let dg = diffusion.apply(g[l]);
                b.add(i, j, a * (dg[0] * g[k][0] + dg[1] * g[k][1]));
            }
        }
    }
    b.build()
}

/// Galerkin convection `C_ij = int (q . grad phi_j) phi_i`.
pub fn assemble_advection(mesh: &Mesh, velocity: &VelocityField) -> CsrMatrix {
    let n = mesh.node_count();
    let mut b = TripletBuilder::new(n, n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let third = mesh.area(t) / 3.0;
        let q = velocity.per_triangle()[t];
        let g = mesh.gradients(t);
        for &i in tri {
            for (l, &j) in tri.iter().enumerate() {
                b.add(i, j, third * (q[0] * g[l][0] + q[1] * g[l][1]));
            }
        }
    }
    b.build()
}

/// Edge-based upwinding: for every edge `(i, j)` add the artificial
/// diffusion `d_ij = max(C_ij, 0, C_ji)`, which removes positive
/// off-diagonal entries while keeping zero row sums.
pub fn upwind_diffusion(convection: &CsrMatrix) -> CsrMatrix {
    let n = convection.nrows();
    let mut b = TripletBuilder::new(n, n);
    for (i, j, cij) in convection.triplets() {
        if i < j {
            let d = cij.max(0.0).max(convection.get(j, i));
            if d > 0.0 {
                b.add(i, j, -d);
                b.add(j, i, -d);
                b.add(i, i, d);
                b.add(j, j, d);
            }
        }
    }
    b.build()
}

/// Largest `|q| h / D` over triangles, with `h` the cell diagonal.
pub fn cell_peclet(mesh: &Mesh, diffusion: &Diffusion, velocity: &VelocityField) -> f64 {
    let speed = velocity
        .per_triangle()
        .iter()
        .map(|q| q[0].hypot(q[1]))
        .fold(0.0, f64::max);
    speed * mesh.h() / diffusion.smallest_eigenvalue()
}

/// Upwinding is switched on above this cell Péclet number.
pub const UPWIND_PECLET_THRESHOLD: f64 = 2.0;

/// Semidiscrete operator restricted to the free (non-Dirichlet) nodes.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    /// `K_ff`: diffusion + advection + `c0 M`, free rows and columns.
    pub stiffness_advection: CsrMatrix,
    /// `K_fd`: coupling of free rows to Dirichlet columns.
    pub boundary_coupling: CsrMatrix,
    /// `M_ff`, consistent.
    pub mass: CsrMatrix,
    /// `M_fd`, consistent.
    pub mass_coupling: CsrMatrix,
    pub mass_lumped: Vec<f64>,
    pub inv_mass_lumped: Vec<f64>,
    /// Nodal lift over all nodes: 1 on the inflow boundary, 0 elsewhere.
    pub dirichlet_lift: Vec<f64>,
    pub c0: f64,
    pub free_dofs: Vec<usize>,
    pub dirichlet_dofs: Vec<usize>,
    /// Certified `lambda` with `sym(K_ff) - lambda M_ff` positive definite.
    pub coercivity: f64,
    pub upwind: bool,
    n_nodes: usize,
}

/// Inflow boundary value.
pub const DIRICHLET_VALUE: f64 = 1.0;

pub fn assemble_operator(
    mesh: &Mesh,
    diffusion: &Diffusion,
    velocity: &VelocityField,
    c0: f64,
    upwind: bool,
) -> Result<DiscreteOperator> {
    if !(diffusion.smallest_eigenvalue() > 0.0) || diffusion.d11 <= 0.0 {
        return Err(invalid("diffusion", "tensor must be symmetric positive definite"));
    }
    if velocity.per_triangle().len() != mesh.triangles().len() {
        return Err(invalid("velocity", "one vector per triangle required"));
    }
    let mass_all = assemble_mass(mesh);
    let mut k_all = assemble_stiffness(mesh, diffusion, None);
    let conv = assemble_advection(mesh, velocity);
    k_all = k_all.linear_combination(1.0, &conv, 1.0);
    if upwind {
        k_all = k_all.linear_combination(1.0, &upwind_diffusion(&conv), 1.0);
    }
    if c0 != 0.0 {
        k_all = k_all.linear_combination(1.0, &mass_all, c0);
    }

    let free = mesh.free_nodes();
    let dir = mesh.dirichlet_nodes();
    let lumped_all = lumped_mass(mesh);
    let mass_lumped: Vec<f64> = free.iter().map(|&i| lumped_all[i]).collect();
    let mut lift = vec![0.0; mesh.node_count()];
    for &i in &dir {
        lift[i] = DIRICHLET_VALUE;
    }

    let stiffness_advection = k_all.select(&free, &free);
    let mass = mass_all.select(&free, &free);
    let coercivity = certify_coercivity(&stiffness_advection, &mass, c0)?;
    Ok(DiscreteOperator {
        boundary_coupling: k_all.select(&free, &dir),
        mass_coupling: mass_all.select(&free, &dir),
        inv_mass_lumped: mass_lumped.iter().map(|m| 1.0 / m).collect(),
        mass_lumped,
        stiffness_advection,
        mass,
        dirichlet_lift: lift,
        c0,
        free_dofs: free,
        dirichlet_dofs: dir,
        coercivity,
        upwind,
        n_nodes: mesh.node_count(),
    })
}

/// Bisects for the largest `lambda` keeping `sym(K) - lambda M` positive
/// definite; fails if even `lambda = 0` does not.
fn certify_coercivity(k: &CsrMatrix, m: &CsrMatrix, c0: f64) -> Result<f64> {
    if k.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let sym = k.symmetric_part();
    if !banded_cholesky_succeeds(&sym, None) {
        return Err(Error::IndefiniteOperator { c0 });
    }
    let mut lo = 0.0;
    let mut hi = c0.max(0.0) + 1.0;
    while banded_cholesky_succeeds(&sym, Some((m, hi))) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(lo);
        }
    }
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if banded_cholesky_succeeds(&sym, Some((m, mid))) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

impl DiscreteOperator {
    /// Algebraic system `M u' + K u = ...` with no boundary nodes; `stiffness`
    /// must already contain any shift. Lumped mass is the row sum of `mass`.
    pub fn from_matrices(mass: CsrMatrix, stiffness: CsrMatrix, c0: f64) -> Self {
        let n = mass.nrows();
        let mass_lumped = mass.row_sums();
        Self {
            boundary_coupling: TripletBuilder::new(n, 0).build(),
            mass_coupling: TripletBuilder::new(n, 0).build(),
            inv_mass_lumped: mass_lumped.iter().map(|m| 1.0 / m).collect(),
            mass_lumped,
            coercivity: 0.0,
            stiffness_advection: stiffness,
            mass,
            dirichlet_lift: vec![0.0; n],
            c0,
            free_dofs: (0..n).collect(),
            dirichlet_dofs: Vec::new(),
            upwind: false,
            n_nodes: n,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// `-K_fd l_d`: the load contributed by the lifted boundary data.
    pub fn lift_load(&self) -> Vec<f64> {
        let ld: Vec<f64> = self.dirichlet_dofs.iter().map(|&i| self.dirichlet_lift[i]).collect();
        self.boundary_coupling.mul_vec(&ld).into_iter().map(|v| -v).collect()
    }

    /// Full nodal field `l + w` from free-dof coefficients `w`.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut out = self.dirichlet_lift.clone();
        for (&i, &v) in self.free_dofs.iter().zip(free_values) {
            out[i] += v;
        }
        out
    }

    /// Free-dof coefficients `w = X - l` of a full nodal field.
    pub fn split(&self, nodal: &[f64]) -> Vec<f64> {
        self.free_dofs
            .iter()
            .map(|&i| nodal[i] - self.dirichlet_lift[i])
            .collect()
    }

    /// Restriction of a full nodal vector to the free dofs.
    pub fn free_part(&self, nodal: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&i| nodal[i]).collect()
    }

    /// `sqrt(e^T M_ff e)` for a free-dof vector.
    pub fn mass_norm(&self, e: &[f64]) -> f64 {
        let me = self.mass.mul_vec(e);
        me.iter().zip(e).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }
}
