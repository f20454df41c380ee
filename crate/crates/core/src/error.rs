use std::fmt;

use thiserror::Error;

/// A single failed configuration invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("{name} must be a positive count")]
    ZeroCount { name: &'static str },
    #[error("pilot length {pilot_length} is shorter than the number of users {num_users}")]
    PilotTooShort { pilot_length: usize, num_users: usize },
    #[error("RF scale magnitude {0} is outside (0, 1]")]
    RfScaleOutOfRange(f64),
    #[error("{name} = {value} must be finite and nonnegative")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("rf_phase = {0} must be finite")]
    NonFinitePhase(f64),
    #[error("expected {expected} large-scale coefficients, got {got}")]
    LargeScaleLength { expected: usize, got: usize },
    #[error("large-scale coefficient beta[{index}] = {value} must be finite and nonnegative")]
    NegativeLargeScale { index: usize, value: f64 },
    #[error("ADC resolution must be at least one bit")]
    ZeroAdcBits,
    #[error("hole radius {hole_radius} must be positive and below the cell radius {cell_radius}")]
    HoleRadius { hole_radius: f64, cell_radius: f64 },
    #[error("path-loss exponent {0} must be positive")]
    PathLossExponent(f64),
    #[error("shadowing standard deviation {0} dB must be nonnegative")]
    ShadowStd(f64),
}

/// All invariant violations found while validating a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("ADC resolution must be at least one bit")]
    InvalidAdcBits,
    #[error("dimension mismatch: {what} expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("negative variance {value} at index {index}")]
    NegativeVariance { index: usize, value: f64 },
    #[error("pilot length {pilot_length} is shorter than the number of users {num_users}")]
    PilotTooShort { pilot_length: usize, num_users: usize },
    #[error("dense LMMSE needs M*tau <= {limit}, got {size}")]
    DenseTooLarge { size: usize, limit: usize },
    #[error("pilot observation covariance is not positive definite")]
    SingularCovariance,
    #[error("error floor is only defined for tau == K (tau = {pilot_length}, K = {num_users})")]
    FloorUndefined { pilot_length: usize, num_users: usize },
    #[error("need at least {min} trials, got {got}")]
    TooFewTrials { min: u64, got: u64 },
    #[error("sweep has no axis values")]
    EmptySweep,
    #[error("sweep axis values must be strictly increasing")]
    UnorderedSweep,
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
