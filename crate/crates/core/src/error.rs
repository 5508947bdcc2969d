use thiserror::Error;

/// Errors raised by the simulation, estimation and metric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}` = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The state left the positive cone by more than the configured tolerance.
    /// Usually means `dt` is too large for the measurement strength.
    #[error("density matrix lost positivity at step {step:?}: smallest eigenvalue {eigenvalue:e}")]
    NotPositive { step: Option<usize>, eigenvalue: f64 },

    #[error("step budget exceeded: {requested} steps requested, at most {max} allowed")]
    StepBudget { requested: u64, max: u64 },

    #[error("root finding did not converge in bracket [{lo}, {hi}]")]
    RootFinding { lo: f64, hi: f64 },

    #[error("non-finite value at grid index {index}; effective-time step too coarse near the boundary")]
    Overflow { index: usize },

    #[error("horizon exhausted: needed {needed}, available {available}")]
    Horizon { needed: f64, available: f64 },

    #[error("empty set")]
    EmptySet,

    #[error("empty sample")]
    EmptySample,

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse error at record {record}: {message}")]
    Parse { record: usize, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected: "a positive finite number",
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected: "a nonnegative finite number",
        })
    }
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected: "a value in [0, 1]",
        })
    }
}
