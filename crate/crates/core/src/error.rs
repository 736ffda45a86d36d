use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point set is empty")]
    EmptySet,
    #[error("leaf cell side {leaf_side:e} is below the sample resolution {resolution:e}")]
    ResolutionExceeded { leaf_side: f64, resolution: f64 },
    #[error("level {level} is outside 0..={max_level}")]
    LevelOutOfRange { level: u32, max_level: u32 },
    #[error("requested cell side {side:e} is below the sample resolution {resolution:e}")]
    ScaleBelowResolution { side: f64, resolution: f64 },
    #[error("scale window too narrow: {0}")]
    WindowTooNarrow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncation too coarse: {0}")]
    TruncationTooCoarse(String),
    #[error("invalid dilatation {0}: must be >= 1")]
    InvalidDilatation(f64),
    #[error("point {point:?} lies within {distance:e} of a map pole (minimum {required:e})")]
    PoleProximity {
        point: [f64; 2],
        distance: f64,
        required: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("spectrum undefined at theta = {0}")]
    SpectrumUndefined(f64),
    #[error("theta {theta} out of range: must be below {limit}")]
    ThetaOutOfRange { theta: f64, limit: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error comes from numeric infeasibility (as opposed to bad input).
    pub fn is_numeric_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::WindowTooNarrow(_)
                | Error::ResolutionExceeded { .. }
                | Error::ScaleBelowResolution { .. }
                | Error::SpectrumUndefined(_)
        )
    }
}
