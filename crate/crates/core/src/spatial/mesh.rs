use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// `X = 1` on the inflow side `x = 0`.
    DirichletInflow,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Structured triangulation of `[0, L1] x [0, L2]`: each grid cell is split
/// along its lower-left to upper-right diagonal. Node `(a, b)` of the grid has
/// index `b * (nx + 1) + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    l1: f64,
    l2: f64,
    nx: usize,
    ny: usize,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
}

pub fn build_mesh(l1: f64, l2: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(invalid("domain", "side lengths must be positive"));
    }
    if nx == 0 || ny == 0 {
        return Err(invalid("mesh", "need at least one cell per direction"));
    }
    let (hx, hy) = (l1 / nx as f64, l2 / ny as f64);
    let idx = |a: usize, b: usize| b * (nx + 1) + a;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for b in 0..=ny {
        for a in 0..=nx {
            // Pin the far edges exactly so boundary coordinates compare equal.
            let x = if a == nx { l1 } else { a as f64 * hx };
            let y = if b == ny { l2 } else { b as f64 * hy };
            nodes.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for b in 0..ny {
        for a in 0..nx {
            let (n00, n10, n01, n11) = (idx(a, b), idx(a + 1, b), idx(a, b + 1), idx(a + 1, b + 1));
            triangles.push([n00, n10, n11]);
            triangles.push([n00, n11, n01]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for a in 0..nx {
        boundary.push(BoundaryEdge {
            nodes: [idx(a, 0), idx(a + 1, 0)],
            tag: BoundaryTag::Neumann,
        });
        boundary.push(BoundaryEdge {
            nodes: [idx(a, ny), idx(a + 1, ny)],
            tag: BoundaryTag::Neumann,
        });
    }
    for b in 0..ny {
        boundary.push(BoundaryEdge {
            nodes: [idx(0, b), idx(0, b + 1)],
            tag: BoundaryTag::DirichletInflow,
        });
        boundary.push(BoundaryEdge {
            nodes: [idx(nx, b), idx(nx, b + 1)],
            tag: BoundaryTag::Neumann,
        });
    }
    Ok(Mesh {
        l1,
        l2,
        nx,
        ny,
        nodes,
        triangles,
        boundary,
    })
}

impl Mesh {
    pub fn lengths(&self) -> (f64, f64) {
        (self.l1, self.l2)
    }

    pub fn cells(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, a: usize, b: usize) -> usize {
        b * (self.nx + 1) + a
    }

    pub fn grid_x(&self) -> Vec<f64> {
        (0..=self.nx).map(|a| self.nodes[a][0]).collect()
    }

    pub fn grid_y(&self) -> Vec<f64> {
        (0..=self.ny).map(|b| self.nodes[self.node_index(0, b)][1]).collect()
    }

    /// Longest triangle edge (the cell diagonal).
    pub fn h(&self) -> f64 {
        let (hx, hy) = (self.l1 / self.nx as f64, self.l2 / self.ny as f64);
        hx.hypot(hy)
    }

    /// Signed area; positive for the counter-clockwise triangles built here.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three barycentric hat functions on triangle `t`.
    pub fn gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        let p = tri.map(|i| self.nodes[i]);
        let twice_area = 2.0 * self.area(t);
        let mut g = [[0.0; 2]; 3];
        for k in 0..3 {
            let (j, l) = ((k + 1) % 3, (k + 2) % 3);
            g[k] = [(p[j][1] - p[l][1]) / twice_area, (p[l][0] - p[j][0]) / twice_area];
        }
        g
    }

    /// Nodes touched by a Dirichlet edge, sorted.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary
            .iter()
            .filter(|e| e.tag == BoundaryTag::DirichletInflow)
            .flat_map(|e| e.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn free_nodes(&self) -> Vec<usize> {
        let mut is_dirichlet = vec![false; self.node_count()];
        for i in self.dirichlet_nodes() {
            is_dirichlet[i] = true;
        }
        (0..self.node_count()).filter(|&i| !is_dirichlet[i]).collect()
    }

    /// The same mesh with every boundary edge tagged Neumann.
    pub fn with_all_neumann(mut self) -> Self {
        for e in &mut self.boundary {
            e.tag = BoundaryTag::Neumann;
        }
        self
    }

    /// Value at `p` of the P1 function with nodal values `values`.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> f64 {
        let (hx, hy) = (self.l1 / self.nx as f64, self.l2 / self.ny as f64);
        let a = ((p[0] / hx).floor().max(0.0) as usize).min(self.nx - 1);
        let b = ((p[1] / hy).floor().max(0.0) as usize).min(self.ny - 1);
        let (s, r) = ((p[0] - a as f64 * hx) / hx, (p[1] - b as f64 * hy) / hy);
        let v = |da, db| values[self.node_index(a + da, b + db)];
        if s >= r {
            // lower triangle (00, 10, 11)
            v(0, 0) * (1.0 - s) + v(1, 0) * (s - r) + v(1, 1) * r
        } else {
            v(0, 0) * (1.0 - r) + v(0, 1) * (r - s) + v(1, 1) * s
        }
    }

    /// Refinement ratio when `fine` subdivides every cell of `self` uniformly.
    pub fn refinement_ratio(&self, fine: &Mesh) -> Option<usize> {
        if self.l1 != fine.l1 || self.l2 != fine.l2 || fine.nx % self.nx != 0 || fine.ny % self.ny != 0 {
            return None;
        }
        let r = fine.nx / self.nx;
        (r == fine.ny / self.ny).then_some(r)
    }

    /// Fine nodal values at the nodes of `self`, for nested meshes.
    pub fn restrict_from(&self, fine: &Mesh, values: &[f64]) -> Option<Vec<f64>> {
        let r = self.refinement_ratio(fine)?;
        let mut out = Vec::with_capacity(self.node_count());
        for b in 0..=self.ny {
            for a in 0..=self.nx {
                out.push(values[fine.node_index(a * r, b * r)]);
            }
        }
        Some(out)
    }
}

/// Nodal interpolation of `f`.
pub fn project_nodal(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    mesh.nodes().iter().map(|&p| f(p)).collect()
}
