use thiserror::Error;

/// Errors produced by the simulation, planning and identification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate collision frame: {0}")]
    DegenerateFrame(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("cam angle {theta} rad outside rotation limits [{lo}, {hi}]")]
    CamOutOfRange { theta: f64, lo: f64, hi: f64 },
    #[error("lcp: {0}")]
    Lcp(#[from] LcpError),
    #[error("simulation failed at t = {t:.6} s: {source}")]
    Simulation { t: f64, source: Box<Error> },
    #[error("no contact episode found in trajectory")]
    NoContact,
    #[error("empty candidate grid")]
    EmptyGrid,
    #[error("mission planned {planned} collisions but {detected} were detected")]
    MissedCollision { planned: usize, detected: usize },
    #[error("all {0} candidates are infeasible")]
    AllInfeasible(usize),
    #[error("observed and simulated time ranges do not overlap")]
    NoOverlap,
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Failure modes of the complementarity solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcpError {
    #[error("dimension mismatch: M is {rows}x{cols}, q has {q_len} entries")]
    Dimension { rows: usize, cols: usize, q_len: usize },
    #[error("scalar problem requires M > 0, got {0}")]
    NonPositive(f64),
    #[error("ray termination after {0} pivots")]
    RayTermination(usize),
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}
