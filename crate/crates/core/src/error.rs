use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("quadrature order {requested} exceeds the supported maximum {max}")]
    DegreeTooLarge { requested: usize, max: usize },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("integrand is not finite at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("region has measure {area}, expected a value strictly between 0 and 1")]
    EmptyRegion { area: f64 },

    #[error("quarter-disk radius {0} outside (0, 1]")]
    RadiusOutOfRange(f64),

    #[error("polyline vertices do not describe a nonincreasing profile from the y-axis to the x-axis")]
    NonMonotoneVertices,

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("region area {area} differs from 1/2")]
    WrongArea { area: f64 },

    #[error("curve points must satisfy x1 <= x2, got {x1} and {x2}")]
    PointsNotOrdered { x1: f64, x2: f64 },

    #[error("curve is not symmetric about the diagonal (defect {0:e})")]
    AsymmetricCurve(f64),

    #[error("g(x) - x has no sign change on [{lo}, {hi}]")]
    NoFixedPoint { lo: f64, hi: f64 },

    #[error("area bracket [{lo}, {hi}] does not contain the target {target}")]
    BracketFailure { lo: f64, hi: f64, target: f64 },

    #[error("rejection sampler exceeded {0} proposals")]
    DegenerateRegion(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
