//! Convergence studies, their CSV output and the command line interface.

pub mod cli;
pub mod selftest;
pub mod spec;
pub mod study;
pub mod table;

pub use cli::cli_main;
pub use spec::{ExperimentSpec, Reaction, UpwindMode};
pub use study::{run_sample, run_spatial_study, run_temporal_study, Discretization};
pub use table::{estimate_order, root_mean_square, Abscissa, ErrorRow, ErrorTable};
