use thiserror::Error;

/// Every failure the library can report.
///
/// Variants split into two families: precondition violations (bad input,
/// not enough data) and internal defects (a sampler or solver left its
/// operating envelope). The CLI maps them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no lattice face around the origin avoids the domain boundary at scale {scale}")]
    DomainTooFine { scale: u32 },

    #[error("random walk exceeded the hard cap of {cap} steps")]
    StepCapExceeded { cap: u64 },

    #[error("measure places mass {distance:.3e} away from the curve trace (tolerance {tolerance:.1e})")]
    SupportMismatch { distance: f64, tolerance: f64 },

    #[error("evaluation point coincides with the origin")]
    SingularAtOrigin,

    #[error("adaptive Loewner step could not reach local error {target:.1e}")]
    StepTooLarge { target: f64 },

    #[error("exponent fit needs at least {needed} distinct scales, got {got}")]
    DegenerateFit { needed: usize, got: usize },

    #[error("only {hits} samples hit the ball, need at least {needed}")]
    InsufficientHits { hits: u64, needed: u64 },

    #[error("conditioning prefix observed {count} times, need at least {needed}")]
    PrefixTooRare { count: u64, needed: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that signal a defect in the simulation itself rather
    /// than a bad request.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::StepCapExceeded { .. } | Error::StepTooLarge { .. } | Error::Io(_)
        )
    }

    /// Stable machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DomainTooFine { .. } => "DomainTooFine",
            Error::StepCapExceeded { .. } => "StepCapExceeded",
            Error::SupportMismatch { .. } => "SupportMismatch",
            Error::SingularAtOrigin => "SingularAtOrigin",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::DegenerateFit { .. } => "DegenerateFit",
            Error::InsufficientHits { .. } => "InsufficientHits",
            Error::PrefixTooRare { .. } => "PrefixTooRare",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
