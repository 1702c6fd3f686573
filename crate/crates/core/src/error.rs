use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model, grid or solver parameter is outside its admissible range.
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// A field does not have one value per grid node.
    GridMismatch {
        expected: usize,
        found: usize,
    },
    NonFinite {
        what: &'static str,
    },
    NegativeArgument {
        name: &'static str,
        value: f64,
    },
    /// The function has a pole at the requested point.
    Pole {
        at: f64,
    },
    QuadratureNonConvergence {
        lower: f64,
        upper: f64,
    },
    /// Φ has no sign change on the search interval.
    NoSignChange,
    /// Φ changes sign more than once; the equilibrium is not unique.
    MultipleRoots {
        sign_changes: usize,
    },
    /// A reduced-ODE step left `[0, λ]` even after repeated halving.
    OdeLeftInterval {
        t: f64,
        value: f64,
    },
    /// A PDE step produced negative values even after repeated halving.
    StepFailure {
        t: f64,
        dt: f64,
        min_value: f64,
    },
    LinearSolve {
        iterations: usize,
        residual: f64,
    },
    InsufficientRecords {
        needed: usize,
        found: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value, reason } => {
                write!(f, "invalid parameter `{name}` = {value}: {reason}")
            }
            Error::GridMismatch { expected, found } => {
                write!(f, "field has {found} values but the grid has {expected} nodes")
            }
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::NegativeArgument { name, value } => {
                write!(f, "argument `{name}` must be nonnegative, got {value}")
            }
            Error::Pole { at } => write!(f, "evaluation at pole u = {at}"),
            Error::QuadratureNonConvergence { lower, upper } => {
                write!(f, "adaptive quadrature did not converge on [{lower}, {upper}]")
            }
            Error::NoSignChange => write!(f, "no sign change of Φ on (0, λ)"),
            Error::MultipleRoots { sign_changes } => write!(
                f,
                "Φ changes sign {sign_changes} times on (0, λ); homogeneous equilibrium is not unique"
            ),
            Error::OdeLeftInterval { t, value } => {
                write!(f, "reduced ODE left [0, λ] at t = {t} (U = {value})")
            }
            Error::StepFailure { t, dt, min_value } => write!(
                f,
                "step at t = {t} with dt = {dt} produced negative value {min_value}"
            ),
            Error::LinearSolve { iterations, residual } => write!(
                f,
                "linear solve stalled after {iterations} iterations (residual {residual:e})"
            ),
            Error::InsufficientRecords { needed, found } => {
                write!(f, "need at least {needed} records, got {found}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}
