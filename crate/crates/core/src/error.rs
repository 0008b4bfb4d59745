use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("drift returned a non-finite value at s = {s} inside the domain")]
    DriftEvaluation { s: f64 },

    #[error("initial state lies outside the domain")]
    InitialStateOutsideDomain,

    #[error("integration diverged at s = {s}")]
    Divergence { s: f64 },

    #[error("every sampled pair had zero distance")]
    DegenerateSamples,

    #[error("draw {draw} out of range for n = {n}")]
    DrawOutOfRange { draw: u64, n: u64 },

    #[error("cover time exceeded the cap of {cap} steps")]
    StepCapExceeded { cap: u64 },

    #[error("precision loss: result {value:e} has accumulated error bound {bound:e}")]
    PrecisionLoss { value: f64, bound: f64 },

    #[error("trajectories share no grid point")]
    NoCommonGrid,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics themselves (divergence, cancellation,
    /// non-finite drift) as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DriftEvaluation { .. }
                | Error::Divergence { .. }
                | Error::PrecisionLoss { .. }
                | Error::DegenerateFit(_)
                | Error::DegenerateSamples
                | Error::StepCapExceeded { .. }
        )
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
