use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset too short: need at least {needed} periods, found {found}")]
    TooShort { needed: usize, found: usize },

    #[error("exogenous column `{0}` missing from dataset")]
    MissingExog(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("all exposure values equal {0}; median threshold is degenerate")]
    ConstantExposure(f64),

    #[error("non-positive value {value} at index {index} cannot be log-transformed")]
    NonPositive { index: usize, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("nonstationary parameters: long-run denominator {0} is not positive")]
    Nonstationary(f64),

    #[error("design matrix is rank deficient; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("exposure has a single class ({0}); both arms are required")]
    SingleClass(u8),

    #[error("IRLS did not converge after {iterations} iterations (max coefficient change per iteration: {trace:?})")]
    NoConvergence { iterations: usize, trace: Vec<f64> },

    #[error("arm emptied by exclusions (trim removed {trimmed}, overlap removed {overlap}; remaining treated {treated}, control {control})")]
    ArmEmptied {
        trimmed: usize,
        overlap: usize,
        treated: usize,
        control: usize,
    },

    #[error("enumeration size m = {m} exceeds cap {cap}")]
    EnumerationCap { m: usize, cap: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Estimator,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::Nonstationary(_) | Error::EnumerationCap { .. } => {
                ErrorClass::Config
            }
            Error::TooShort { .. }
            | Error::MissingExog(_)
            | Error::InvalidData(_)
            | Error::ConstantExposure(_)
            | Error::NonPositive { .. }
            | Error::Csv(_)
            | Error::Io(_) => ErrorClass::Data,
            Error::RankDeficient(_) | Error::SingleClass(_) | Error::NoConvergence { .. } | Error::ArmEmptied { .. } => {
                ErrorClass::Estimator
            }
        }
    }
}
