use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the admissible domain.
    #[error("invalid input: {0}")]
    Invalid(&'static str),
    /// Input outside the admissible domain, with the offending value.
    #[error("invalid input: {what} (got {value})")]
    OutOfRange { what: &'static str, value: f64 },
    /// A computation failed to reach its tolerance or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    /// A step-size controller collapsed below its floor.
    #[error("step size underflow at t = {t} (dt = {dt})")]
    StepUnderflow { t: f64, dt: f64 },
    /// A solver stopped at a safety limit before the requested output times.
    #[error("run stopped by the {reason} at t = {t}, before the last output time")]
    Halted { reason: &'static str, t: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && (0.0..2.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "lambda must lie in [0, 2)",
            value: lambda,
        })
    }
}
