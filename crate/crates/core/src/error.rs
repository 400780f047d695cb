use thiserror::Error;

/// Errors raised by the solvers, oracles and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called on inputs that violate its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested problem size exceeds the configured work budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An iterative procedure did not reach the requested accuracy.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A bracketing search could not find a sign change.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// A test ball or shell does not fit the domain.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Field data is inconsistent with the requested check.
    #[error("data error: {0}")]
    Data(String),

    /// The profile has no region on which the requested quantity is defined.
    #[error("empty region: {0}")]
    EmptyRegion(String),

    /// Configuration could not be parsed or validated.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
