//! Error type shared across the crate.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input slice had the wrong length.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A derivative or function value came out non-finite.
    NonFinite {
        what: &'static str,
        coordinate: usize,
    },
    /// A point left the chart domain (e.g. the scaling function was
    /// evaluated at or below zero).
    ChartViolation { message: String },
    /// The velocity Hessian of the Lagrangian is (numerically) singular,
    /// so the equations of motion cannot be put in rate form.
    SingularLagrangian { condition: f64 },
    /// The (x-dot, y) block Hessian of a reduced Lagrangian is singular.
    ReducedRegularity { condition: f64 },
    /// An integration step failed; carries the time stamp of the failure.
    AtTime { t: f64, source: Box<Error> },
    /// Scenario lookup failed.
    UnknownScenario { name: String, known: Vec<String> },
    /// A scenario document violated the schema; `path` points into the
    /// document (e.g. `scaling.psi[1]`).
    Schema { path: String, message: String },
    /// An expression string failed to parse.
    ExprParse { position: usize, message: String },
    /// Mismatched inputs that are individually valid (e.g. a Hamilton-class
    /// variation offered to the reduced action, or a simulation mode the
    /// scenario cannot serve).
    Incompatible { message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected dimension {expected}, got {got}"),
            Error::NonFinite { what, coordinate } => {
                write!(f, "{what}: non-finite value in coordinate {coordinate}")
            }
            Error::ChartViolation { message } => write!(f, "chart violation: {message}"),
            Error::SingularLagrangian { condition } => write!(
                f,
                "singular Lagrangian: velocity Hessian condition estimate {condition:.3e} \
                 (rate-form integration needs a regular Lagrangian; use the residual evaluators \
                 for degenerate systems)"
            ),
            Error::ReducedRegularity { condition } => write!(
                f,
                "reduced Lagrangian is not regular: block Hessian condition estimate {condition:.3e}"
            ),
            Error::AtTime { t, source } => write!(f, "at t = {t}: {source}"),
            Error::UnknownScenario { name, known } => {
                write!(f, "unknown scenario `{name}`; registered scenarios: ")?;
                for (i, k) in known.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
            Error::Schema { path, message } => write!(f, "scenario schema error at {path}: {message}"),
            Error::ExprParse { position, message } => {
                write!(f, "expression parse error at byte {position}: {message}")
            }
            Error::Incompatible { message } => write!(f, "{message}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtTime { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub(crate) fn at_time(self, t: f64) -> Error {
        Error::AtTime {
            t,
            source: Box::new(self),
        }
    }
}
