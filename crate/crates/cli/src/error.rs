use lll_apps::hypergraph::HypError;
use lll_apps::nonrep::NonRepError;
use lll_apps::perm::PermAppError;
use lll_apps::sat::SatError;
use lll_core::entropy::EntropyError;
use lll_core::truncated::TruncatedError;
use lll_core::EngineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("criterion violated: {0}")]
    Criterion(String),
    #[error("resampling cap of {0} exceeded")]
    Cap(u64),
    #[error("run failed: {0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 parse or input error, 3 criterion violated, 4 cap exceeded,
    /// 5 a run or acceptance check failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid(_) | CliError::Io(_) => 2,
            CliError::Criterion(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Failed(_) => 5,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::CapExceeded { cap } => CliError::Cap(cap),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<TruncatedError> for CliError {
    fn from(e: TruncatedError) -> Self {
        match e {
            TruncatedError::Engine(e) => e.into(),
            TruncatedError::CriterionViolated { .. } | TruncatedError::AugmentedViolated { .. } => {
                CliError::Criterion(e.to_string())
            }
            TruncatedError::AlphaOutOfRange(_) | TruncatedError::BadParameters { .. } => CliError::Invalid(e.to_string()),
            TruncatedError::NoRoot => CliError::Failed(e.to_string()),
        }
    }
}

impl From<PermAppError> for CliError {
    fn from(e: PermAppError) -> Self {
        match e {
            PermAppError::Engine(e) => e.into(),
            PermAppError::TooManyRepeats { .. } | PermAppError::WeightTooLarge { .. } => CliError::Criterion(e.to_string()),
            PermAppError::NotSquare(_) | PermAppError::InvalidBeta(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<NonRepError> for CliError {
    fn from(e: NonRepError) -> Self {
        match e {
            NonRepError::Engine(e) => e.into(),
            NonRepError::InvalidParameters(_) => CliError::Invalid(e.to_string()),
            NonRepError::Infeasible => CliError::Criterion(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<HypError> for CliError {
    fn from(e: HypError) -> Self {
        match e {
            HypError::Engine(e) => e.into(),
            HypError::InvalidInstance(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<SatError> for CliError {
    fn from(e: SatError) -> Self {
        match e {
            SatError::Engine(e) => e.into(),
            SatError::OccurrenceTooLarge { .. } => CliError::Criterion(e.to_string()),
            SatError::ShortcutExhausted(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<EntropyError> for CliError {
    fn from(e: EntropyError) -> Self {
        match e {
            EntropyError::CriterionViolated(_) => CliError::Criterion(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}
