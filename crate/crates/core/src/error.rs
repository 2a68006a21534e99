use thiserror::Error;

/// Failures raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point lies on the boundary of the body (distance {distance:e})")]
    XOnBoundary { distance: f64 },
    #[error("point lies outside the body")]
    PointOutside,
    #[error("degree {degree} exceeds the limit {max} for dimension {dim}")]
    DegreeTooLarge { degree: usize, max: usize, dim: usize },
    #[error("Monte Carlo error bound {bound:e} exceeds 1e-2 of the scale {scale:e}")]
    MCVarianceTooHigh { bound: f64, scale: f64 },
    #[error("Gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("supporting normal has non-positive first component ({0:e})")]
    InvalidNormal(f64),
    #[error("lines q1 and q2 are nearly parallel (sin phi = {0:e})")]
    DegenerateAngle(f64),
    #[error("body is not contained in the box image: worst coordinate {worst:.3e} beyond 1")]
    ContainmentFailed { worst: f64 },
    #[error("planar section is degenerate: {0}")]
    SectionDegenerate(String),
    #[error("delta = {delta:e} is below sigma * n^-2 = {threshold:e}")]
    SigmaViolated { delta: f64, threshold: f64 },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("round trip failed: {0}")]
    RoundTripFailed(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("experiment parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error(transparent)]
    IOError(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Violated geometric or mathematical invariant, as opposed to a numerical breakdown.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::ContainmentFailed { .. }
                | Error::RoundTripFailed(_)
                | Error::SigmaViolated { .. }
                | Error::InvalidNormal(_)
                | Error::SectionDegenerate(_)
        )
    }

    pub fn is_numerical_failure(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite
                | Error::MCVarianceTooHigh { .. }
                | Error::DegenerateAngle(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
