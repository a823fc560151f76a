use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hurst parameter {0} outside the supported range (1/2, 1]")]
    InvalidHurst(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("circulant embedding is indefinite: eigenvalue {eigenvalue:e} (max {max:e})")]
    CirculantEmbeddingIndefinite { eigenvalue: f64, max: f64 },

    #[error("fGn covariance matrix is not positive definite at row {row}")]
    CholeskyNotPD { row: usize },

    #[error("aggregation factor {factor} does not divide {n_steps} steps")]
    NonDivisibleFactor { factor: usize, n_steps: usize },

    #[error("step index {index} outside noise blocks of length {len}")]
    StepIndexOutOfRange { index: usize, len: usize },

    #[error("operator not coercive after shift c0 = {c0}")]
    IndefiniteOperator { c0: f64 },

    #[error("iterative solver diverged after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("Krylov exponential stagnated at t = {t_reached:e} of {t_target:e}")]
    KrylovStagnation { t_reached: f64, t_target: f64 },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("{0} selftest checks failed")]
    SelftestFailed(usize),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidHurst(_) => "InvalidHurst",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::CirculantEmbeddingIndefinite { .. } => "CirculantEmbeddingIndefinite",
            Error::CholeskyNotPD { .. } => "CholeskyNotPD",
            Error::NonDivisibleFactor { .. } => "NonDivisibleFactor",
            Error::StepIndexOutOfRange { .. } => "StepIndexOutOfRange",
            Error::IndefiniteOperator { .. } => "IndefiniteOperator",
            Error::SolverDiverged { .. } => "SolverDiverged",
            Error::KrylovStagnation { .. } => "KrylovStagnation",
            Error::DegenerateRegression(_) => "DegenerateRegression",
            Error::InvalidExperiment(_) => "InvalidExperiment",
            Error::SelftestFailed(_) => "SelftestFailed",
            Error::Io(_) => "Io",
        }
    }

    /// Configuration mistakes, as opposed to numerical failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidHurst(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidExperiment(_)
                | Error::NonDivisibleFactor { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
