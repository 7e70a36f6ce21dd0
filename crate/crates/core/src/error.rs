use alloc::string::String;
use num_complex::Complex64;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point {0} is not inside the open unit disk")]
    OutsideDisk(Complex64),

    #[error("point {0} is not inside the upper half-plane")]
    OutsideHalfPlane(Complex64),

    #[error("logarithmic coordinates are undefined at the origin (Im zeta would be infinite)")]
    OriginHasNoLogCoordinate,

    #[error("shrink factor {eps} leaves an empty box (need 0 <= eps < 1/2)")]
    EmptyBox { eps: f64 },

    #[error("annulus needs {count:e} boxes; use the half-plane model for this scale")]
    TooManyBoxes { count: f64 },

    #[error("integrand is not finite at {at}")]
    NonFinite { at: Complex64 },

    #[error("quadrature did not converge: value {value:e}, error estimate {err_estimate:e}")]
    NotConverged { value: f64, err_estimate: f64 },

    #[error("weighted measure dA/(1-|z|^2) diverges on the full disk (radius {radius})")]
    Divergent { radius: f64 },

    #[error("measure {measure} is not defined on region {region}")]
    UnsupportedMeasure {
        measure: &'static str,
        region: &'static str,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
