use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is off the manifold (residual {residual:.3e})")]
    OffManifold { residual: f64 },

    #[error("operation not supported for manifold {0}")]
    UnsupportedManifold(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("row {row} has an empty active set that could not be repaired")]
    DegenerateActiveSet { row: usize },

    #[error("row {0} of the coupling sums to zero")]
    ZeroRow(usize),

    #[error("problem size {n} exceeds the oracle limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("radius {radius:.4} exceeds the small-ball cap {cap:.4}")]
    CapViolation { radius: f64, cap: f64 },

    #[error("threshold {0:.6} reaches the circle diameter squared")]
    ThresholdTooLarge(f64),

    #[error("no active neighbor at the base point")]
    NoActiveNeighbor,

    #[error("finite-difference stencil straddles the free boundary")]
    FreeBoundary,

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::DegenerateActiveSet { .. }
                | Error::ZeroRow(_)
                | Error::NoActiveNeighbor
                | Error::DegenerateWindow(_)
        )
    }

    /// Short token for CSV status columns.
    pub fn status_token(&self) -> &'static str {
        match self {
            Error::NonConvergence { .. } => "nonconvergence",
            Error::DegenerateActiveSet { .. } => "degenerate-active-set",
            Error::ZeroRow(_) => "zero-row",
            Error::CapViolation { .. } => "cap-violation",
            Error::ThresholdTooLarge(_) => "threshold-too-large",
            Error::NoActiveNeighbor => "no-active-neighbor",
            Error::FreeBoundary => "free-boundary",
            Error::DegenerateWindow(_) => "degenerate-window",
            Error::Io(_) => "io-error",
            _ => "invalid",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
