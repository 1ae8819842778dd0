use num_complex::Complex64;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid scale {0}: must be positive")]
    InvalidScale(f64),
    #[error("invalid capacity increment {0}: must be positive")]
    InvalidCapacity(f64),
    #[error("invalid tilt {0}: must lie in (0, 1)")]
    InvalidTilt(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point {z} swallowed by step {step}")]
    PointSwallowed { step: usize, z: Complex64 },
    #[error("ambiguous boundary point {0}: side must be specified")]
    AmbiguousBoundary(f64),
    #[error("near-singular evaluation at x = {x}: distance to hull {distance:e}")]
    NearSingularity { x: f64, distance: f64 },
    #[error("grid too coarse: {0}")]
    RefineNeeded(String),
    #[error("fit failure at {location}: {reason}")]
    FitFailure { location: String, reason: String },
    #[error("extension failure: {0}")]
    Extension(String),
    #[error("bisection bracket failure: {reason}")]
    Bracket { reason: String, sweep: Vec<(f64, f64)> },
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed or invalid input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGeometry(_)
                | Error::InvalidScale(_)
                | Error::InvalidCapacity(_)
                | Error::InvalidTilt(_)
                | Error::InvalidInput(_)
                | Error::Incompatible(_)
        )
    }

    /// True for errors caused by reading or parsing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
