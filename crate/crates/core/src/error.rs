use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped so that front ends can map them onto exit codes:
/// precondition failures, resource budgets, and numerical verification
/// failures are distinct.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what}: {required} work units exceed the budget of {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("quadrature did not reach tolerance {tolerance:e}: estimate {estimate:e} (value {value_re:e}{value_im:+e}i)")]
    QuadratureTolerance {
        value_re: f64,
        value_im: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("{what}: two evaluation routes differ by {discrepancy:e} (tolerance {tolerance:e})")]
    Mismatch {
        what: &'static str,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for resource-budget failures (as opposed to bad input).
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks a work estimate against a budget.
pub(crate) fn check_budget(what: &'static str, required: u128, budget: u128) -> Result<()> {
    if required > budget {
        Err(Error::BudgetExceeded {
            what,
            required,
            budget,
        })
    } else {
        Ok(())
    }
}
