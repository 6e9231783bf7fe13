use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    /// The navigation field was evaluated where an obstacle term vanishes.
    #[error("navigation field is singular: {0}")]
    SingularField(String),

    #[error("numerical blow-up at t = {time:.6} s: {detail}")]
    NumericalBlowup { time: f64, detail: String },

    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("plan inconsistency: {0}")]
    PlanInconsistency(String),

    #[error("round {round} failed: {reason}")]
    RoundFailure { round: usize, reason: String },

    #[error("scenario format: {0}")]
    Format(String),
}
