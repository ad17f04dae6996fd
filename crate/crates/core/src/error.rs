use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// The variants map one-to-one onto the CLI exit codes, see
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("budget infeasible: {0}")]
    BudgetInfeasible(String),

    #[error("geometry failure: {0}")]
    Geometry(String),

    #[error("censoring: {censored} of {total} trajectories hit the step cap (limit fraction {limit:e})")]
    Censored { censored: u64, total: u64, limit: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::BudgetInfeasible(_) => 3,
            Error::Geometry(_) | Error::Censored { .. } => 4,
            // numerical failures are surfaced with the geometry/censoring class
            Error::Quadrature(_) => 4,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
