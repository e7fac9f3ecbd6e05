use thiserror::Error;

use crate::eigensolve::EigenPair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {value} lies outside the domain [0, {length}]")]
    Domain { value: f64, length: f64 },

    #[error("the {0} interaction is a measure and cannot be evaluated pointwise")]
    NotPointwise(&'static str),

    #[error("hard-core interaction is singular at r = 0")]
    Singular,

    #[error("mesh size h = {h} does not resolve the well length {well_length}")]
    Resolution { h: f64, well_length: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {family} '{name}' (available: {available})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        available: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("LDL^T factorization broke down at row {row} (shift {shift})")]
    Factorization { row: usize, shift: f64 },

    #[error("eigensolver converged {converged} of {requested} eigenpairs: {reason}")]
    Convergence {
        requested: usize,
        converged: usize,
        reason: String,
        partial: Vec<EigenPair>,
    },

    #[error("dense oracle needs {bytes} bytes for dimension {dimension}, limit is {limit}")]
    Size {
        dimension: usize,
        bytes: usize,
        limit: usize,
    },

    #[error("no dominant frequency component, the tunneling period is undefined")]
    NoDominantComponent,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::UnknownStrategy { .. }
            | Error::Resolution { .. }
            | Error::Domain { .. } => 2,
            Error::Convergence { .. } | Error::Factorization { .. } => 3,
            _ => 1,
        }
    }
}
