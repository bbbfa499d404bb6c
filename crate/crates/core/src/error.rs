use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("requested rank {requested} exceeds achievable rank {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("degenerate column {0}: zero norm")]
    DegenerateColumn(usize),

    #[error("basis columns are not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("operator is singular")]
    Singular,

    #[error("sampled basis has rank {rank} of {cols} (condition number {condition:.3e})")]
    SampledBasisRank {
        rank: usize,
        cols: usize,
        condition: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("Newton iteration did not converge at step {step} (residual norm {residual:.3e})")]
    NewtonNotConverged { step: usize, residual: f64 },

    #[error("nonlinear solver diverged at step {step} (update norm {update_norm:.3e})")]
    Diverged { step: usize, update_norm: f64 },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::Singular
                | Error::SampledBasisRank { .. }
                | Error::NewtonNotConverged { .. }
                | Error::Diverged { .. }
                | Error::NonFinite { .. }
                | Error::DegenerateColumn(_)
                | Error::NotOrthonormal(_)
        )
    }
}
