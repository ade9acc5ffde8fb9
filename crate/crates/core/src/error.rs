use thiserror::Error;

/// Errors raised by map construction and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {x} lies outside [0, 1]")]
    OutOfDomain { x: f64 },

    #[error("point {x} belongs to the critical set; a side (left or right) is required")]
    SideRequired { x: f64 },

    #[error("branch supplies no derivative of order {order}")]
    UndefinedDerivative { order: u8 },

    #[error("derivative {value:e} at x = {x} is too small to form the Schwarzian")]
    SingularDerivative { x: f64, value: f64 },

    #[error("critical order fit at c = {c} has only {usable} usable offsets (need 5)")]
    DegenerateFit { c: f64, usable: usize },

    #[error("unknown map family '{0}'")]
    UnknownFamily(String),

    #[error("invalid parameters for family '{family}': {reason}")]
    InvalidParams { family: String, reason: String },

    #[error("malformed map: {0}")]
    InvalidMap(String),

    #[error("branch inversion for y = {y} did not converge after {iterations} iterations")]
    NoConvergence { y: f64, iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
