//! Plain-text debugging dumps.
//!
//! `nodes.txt`: `id x y` per line. `triangles.txt`: `id a b c`.
//! `boundary.txt`: `a b tag`. `operator_K.txt` and `operator_M.txt`: one
//! `row col value` triplet per stored entry, indices over free dofs, which are
//! listed in `free_dofs.txt`. Every file starts with a `#` header line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::assembly::DiscreteOperator;
use super::mesh::{BoundaryTag, Mesh};
use crate::error::Result;
use crate::matfunc::CsrMatrix;

pub fn write_mesh(mesh: &Mesh, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut s = String::from("# id x y\n");
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(s, "{i} {:.17e} {:.17e}", p[0], p[1]);
    }
    fs::write(dir.join("nodes.txt"), s)?;

    let mut s = String::from("# id a b c\n");
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(s, "{t} {} {} {}", tri[0], tri[1], tri[2]);
    }
    fs::write(dir.join("triangles.txt"), s)?;

    let mut s = String::from("# a b tag\n");
    for e in mesh.boundary_edges() {
        let tag = match e.tag {
            BoundaryTag::DirichletInflow => "dirichlet",
            BoundaryTag::Neumann => "neumann",
        };
        let _ = writeln!(s, "{} {} {tag}", e.nodes[0], e.nodes[1]);
    }
    fs::write(dir.join("boundary.txt"), s)?;
    Ok(())
}

fn triplets(m: &CsrMatrix) -> String {
    let mut s = format!("# row col value ({} x {})\n", m.nrows(), m.ncols());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(s, "{i} {j} {v:.17e}");
    }
    s
}

pub fn write_operator(op: &DiscreteOperator, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("operator_K.txt"), triplets(&op.stiffness_advection))?;
    fs::write(dir.join("operator_M.txt"), triplets(&op.mass))?;
    let mut s = String::from("# free_index node_id\n");
    for (k, i) in op.free_dofs.iter().enumerate() {
        let _ = writeln!(s, "{k} {i}");
    }
    fs::write(dir.join("free_dofs.txt"), s)?;
    Ok(())
}
