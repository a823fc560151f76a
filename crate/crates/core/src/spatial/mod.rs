//! Structured P1 finite elements on `[0, L1] x [0, L2]`: mesh, operator
//! assembly with lifted Dirichlet data, and the Darcy transport velocity.

pub mod assembly;
pub mod darcy;
pub mod dump;
pub mod mesh;

pub use assembly::{assemble_operator, cell_peclet, Diffusion, DiscreteOperator};
pub use darcy::{random_log_permeability, solve_darcy, LogPermeability, VelocityField};
pub use mesh::{build_mesh, project_nodal, BoundaryEdge, BoundaryTag, Mesh};
