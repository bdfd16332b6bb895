use thiserror::Error;

use crate::rifs::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition on an input object does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The requested work exceeds a configured cap.
    #[error("resource limit: {what} needs {needed}, cap is {cap}")]
    Resource {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    /// The problem instance has no non-degenerate answer.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// A weight does not shrink around some admissible cycle, so a threshold
    /// cut would never terminate.
    #[error("non-terminating antichain: edge ({from},{to}) with weight factor {factor} lies on a cycle where the weight never shrinks")]
    NonTermination { from: usize, to: usize, factor: f64 },

    /// An iterative routine ran out of iterations.
    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("invalid system: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
