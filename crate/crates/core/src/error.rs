use thiserror::Error;

/// Errors raised by the analysis library.
///
/// Variants map onto two broad classes used by the CLI exit codes:
/// input validation (`Invalid*`, `Parse`, `Case`) and numerical failures
/// (`NonConvergence`, `InconsistentDispatch`, `SingularElimination`, ...).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported order {order}: {reason}")]
    UnsupportedOrder { order: usize, reason: &'static str },

    #[error("case parse error: {0}")]
    Parse(String),

    #[error("invalid case data: {0}")]
    Case(String),

    #[error("{stage} did not converge in {iterations} iterations (last mismatch {mismatch:.3e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        mismatch: f64,
    },

    #[error("inconsistent dispatch: residual {residual:.3e} pu on machine {machine} after solving the difference equations")]
    InconsistentDispatch { machine: usize, residual: f64 },

    #[error("singular elimination block over nodes {0:?}")]
    SingularElimination(Vec<String>),

    #[error("expansion point is not an equilibrium (residual {0:.3e} pu)")]
    NotEquilibrium(f64),

    #[error("boundary search exceeded {evaluations} simulations; last bracket [{lower:.6}, {upper:.6}]")]
    SearchCapExceeded {
        evaluations: usize,
        lower: f64,
        upper: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::InconsistentDispatch { .. }
                | Error::SingularElimination(_)
                | Error::NotEquilibrium(_)
                | Error::SearchCapExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
