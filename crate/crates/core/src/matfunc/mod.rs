//! Sparse linear algebra: the implicit resolvent and exponential-type actions
//! of the semidiscrete operator.

pub mod dense;
pub mod krylov;
pub mod solve;
pub mod sparse;

pub use dense::DenseMatrix;
pub use krylov::{exp_affine_action, expm_action, phi1_action, KrylovConfig, LumpedGenerator, OperatorAction};
pub use solve::{bicgstab, conjugate_gradient, solve_shifted, ShiftedSystem, SolverConfig};
pub use sparse::{CsrMatrix, TripletBuilder};
