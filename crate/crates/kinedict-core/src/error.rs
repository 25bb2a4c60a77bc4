//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors produced by kinedict-core operations.
///
/// The crate distinguishes malformed *inputs* (wrong shapes, non-finite values,
/// out-of-range parameters) from *numeric* failure modes that only arise on
/// valid inputs (near-antipodal quaternion combinations, under-constrained fit
/// problems), so callers can map them to different exit paths.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidInput(String),
    /// Two containers that must agree in size did not.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A convex combination of quaternions cancelled to (near) zero norm, so no
    /// direction — and hence no rotation — can be recovered from it.
    DegenerateCombination,
    /// A fit problem does not pin down its unknowns (too few visible joints).
    UnderConstrained { visible: usize, needed: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
            Error::DimensionMismatch {
                context,
                expected,
                got,
            } => write!(f, "dimension mismatch in {context}: expected {expected}, got {got}"),
            Error::DegenerateCombination => {
                write!(f, "degenerate combination: quaternion blend cancelled to near-zero norm")
            }
            Error::UnderConstrained { visible, needed } => write!(
                f,
                "under-constrained problem: {visible} visible joints, need at least {needed}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(alloc::format!("{what}: non-finite value")))
    }
}
