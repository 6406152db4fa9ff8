use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite input coordinate")]
    NonFinite,

    #[error("empty design")]
    EmptyDesign,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("observations missing from design")]
    MissingObservations,

    #[error("matrix is not positive definite (failed at pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("degenerate predictive variance at query point")]
    DegenerateVariance,

    #[error("operation not supported for kernel family {0}")]
    UnsupportedFamily(&'static str),

    #[error("no discrimination possible: kernels are identical")]
    NoDiscrimination,

    #[error("parameters locally unidentifiable: information matrix is singular")]
    Unidentifiable,

    #[error("argument {arg} = {value} outside the supported domain of the Bessel function")]
    BesselDomain { arg: &'static str, value: f64 },

    #[error("no feasible candidate: every candidate violates the minimum-distance constraint")]
    NoFeasibleCandidate,

    #[error("empty candidate set or grid")]
    EmptyCandidates,

    #[error("likelihood is non-finite over the whole parameter interval")]
    FitFailed,

    #[error("criterion `{0}` has no design-level value; exchange is not defined for it")]
    NotDesignLevel(String),

    #[error("unknown identifier `{given}`; expected one of: {expected}")]
    UnknownId { given: String, expected: String },

    #[error("invalid design measure: {0}")]
    InvalidMeasure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of the computation itself rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::NotPositiveSemidefinite { .. }
                | Error::DegenerateVariance
                | Error::Unidentifiable
                | Error::BesselDomain { .. }
                | Error::FitFailed
                | Error::NoFeasibleCandidate
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
