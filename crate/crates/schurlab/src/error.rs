//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Node count does not match the requested divided-difference order.
    #[error("order mismatch: expected {expected} nodes, got {got}")]
    OrderMismatch { expected: usize, got: usize },

    /// A node repeats m times but the function only carries m-2 derivatives.
    #[error("insufficient derivatives: multiplicity {multiplicity} needs order >= {required}, function has {available}")]
    InsufficientDerivatives {
        multiplicity: usize,
        required: usize,
        available: usize,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// Kernel matrices do not share the symbol's grid.
    #[error("grid mismatch between symbol and kernel matrices")]
    GridMismatch,

    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    /// Nyquist check failed: too much spectral mass in the top octave.
    #[error("resolution too low: top-octave mass {tail:.3e} vs total {value:.3e}")]
    ResolutionTooLow { value: f64, tail: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Cayley transform pole at z = 1")]
    PoleAtOne,

    #[error("coincident nodes where distinct nodes are required")]
    NodeCoincidence,

    #[error("unsupported wavelet order {0} (supported: 1..=10)")]
    UnsupportedOrder(usize),

    /// Cascade iterates failed to agree at the final refinement step.
    #[error("cascade did not converge: final-step sup difference {sup_diff:.3e}")]
    NonConvergence { sup_diff: f64 },

    /// Requested scale outruns the cascade sampling budget.
    #[error("resolution insufficient for scale j = {scale} at depth J = {depth}")]
    ResolutionInsufficient { scale: i32, depth: u32 },

    /// The layer-derivative sum fails its truncation budget.
    #[error("series divergence: boundary term {boundary:.3e} vs budget {budget:.3e}")]
    SeriesDivergence { boundary: f64, budget: f64 },

    /// The wavelet is not regular enough for the requested operation.
    #[error("regularity too low: need beta > {required}, wavelet provides {available}")]
    RegularityTooLow { required: f64, available: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("i/o failure: {0}")]
    IoFailure(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}
