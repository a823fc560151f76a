//! Finite element discretization and Euler-type time integrators for
//! semilinear parabolic SPDEs driven by additive fractional Brownian motion
//! (Hurst index in (1/2, 1]) and optional compensated Poisson jumps, with a
//! harness that measures strong convergence orders empirically.
//!
//! The pieces, bottom up:
//!
//! - [`fbm`]: exact-law fBm increments (circulant embedding, Cholesky, H = 1).
//! - [`noise`]: the Q-cylindrical noise as a truncated cosine series on the mesh.
//! - [`jumps`]: compensated compound Poisson increments.
//! - [`spatial`]: structured P1 meshes, operator assembly, Darcy velocity.
//! - [`matfunc`]: sparse solvers and Krylov `exp`/`phi1` actions.
//! - [`steppers`]: linear implicit Euler, SETD1 and the Rosenbrock scheme SERS.
//! - [`harness`]: coupled-path convergence studies, CSV output and the CLI.

pub mod error;
pub mod fbm;
pub mod harness;
pub mod jumps;
pub mod matfunc;
pub mod noise;
pub mod rng;
pub mod spatial;
pub mod steppers;

pub use error::{Error, Result};
pub use fbm::{FbmIncrementBlock, GeneratorMethod, HurstParam};
pub use harness::{ErrorTable, ExperimentSpec};
pub use steppers::Scheme;
