use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments that do not fit together (dimension mismatch,
    /// empty sets, unordered pairs, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("capacity exceeded: {what} is {got}, cap is {cap}")]
    Capacity { what: &'static str, got: usize, cap: usize },

    /// A mathematical hypothesis of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("adjacency violation: problems differ in agents {0:?}, at most one may differ")]
    Adjacency(Vec<usize>),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("step-size fault: agent {agent} left the domain by {excess:.3e} at round {round}")]
    StepSize { round: usize, agent: usize, excess: f64 },

    /// A property that is supposed to hold was observed to fail.
    #[error("property violation: {0}")]
    Violation(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Process exit code: 1 property violation, 2 usage, 3 solver/numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Violation(_) => 1,
            Error::Solver(_) | Error::StepSize { .. } => 3,
            Error::Usage(_)
            | Error::Capacity { .. }
            | Error::Precondition(_)
            | Error::Adjacency(_)
            | Error::Io { .. }
            | Error::Json(_) => 2,
        }
    }
}
