use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Propagation through a segment produced a non-finite or degenerate state.
    #[error("transfer matrix is singular at segment {segment}")]
    SingularSegment { segment: usize },

    /// The interface matrix of a layer stack could not be inverted.
    #[error("characteristic matrix is singular at frequency {frequency}")]
    SingularStack { frequency: f64 },

    #[error("finite-difference step underflow at {at}")]
    StepUnderflow { at: f64 },

    /// Adjacent phase samples differ by too much to be unwrapped unambiguously.
    #[error("phase unwrapping failed on [{lo}, {hi}]: jump of {jump:.3} rad")]
    PhaseUnwrap { lo: f64, hi: f64, jump: f64 },

    #[error("quadrature not converged: doubling the nodes changed the field by {change:.3e} (tolerance {tol:.3e})")]
    QuadratureNotConverged { change: f64, tol: f64 },

    /// The post-selected channel has (numerically) zero probability.
    #[error("degenerate post-selection: |amplitude| = {magnitude:.3e} is below {threshold:.3e}")]
    DegeneratePostSelection { magnitude: f64, threshold: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The field does not vanish at the ends of the time grid.
    #[error("time grid truncated: residual {residual:.3e} of the peak exceeds {tol:.3e}; widen the time grid")]
    TimeGridTruncated { residual: f64, tol: f64 },

    #[error("pointer grid aliasing: {0}")]
    PointerAliasing(String),

    #[error("operator is not a projector (idempotency defect {defect:.3e})")]
    NotProjector { defect: f64 },

    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("state is not normalised (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("final-state basis is not orthonormal and complete (defect {defect:.3e})")]
    IncompleteBasis { defect: f64 },

    #[error("no evanescent region: k = {k} is not below k0 = {k0}")]
    NotEvanescent { k: f64, k0: f64 },

    /// Final-state constructions need a mirror-symmetric potential.
    #[error("potential profile is not mirror symmetric about x = 0")]
    NotSymmetric,
}

impl Error {
    /// True when the error stems from bad user input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::GridMismatch(_)
                | Error::NotProjector { .. }
                | Error::NotHermitian { .. }
                | Error::NotNormalized { .. }
                | Error::IncompleteBasis { .. }
                | Error::NotEvanescent { .. }
                | Error::NotSymmetric
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
