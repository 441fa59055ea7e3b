use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty digit word")]
    EmptyWord,
    #[error("digit {digit} at position {position} is not allowed here")]
    InvalidDigit { position: usize, digit: u64 },
    #[error("rational orbit terminated after {emitted} digits")]
    RationalTermination { emitted: usize },
    #[error("precision budget exhausted after {emitted} certified digits")]
    PrecisionExhausted { emitted: usize },
    #[error("gauss map undefined at zero")]
    UndefinedAtZero,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no markov witness above the precision floor")]
    NoWitnessFound,
    #[error("invalid process spec: {0}")]
    InvalidSpec(String),
    #[error("zero-mass path encountered at sample {sample}")]
    ZeroMassEncountered { sample: usize },
    #[error("law has infinite entropy")]
    InfiniteEntropy,
    #[error("law has infinite logarithmic moment")]
    InfiniteLogMoment,
    #[error("path of length {len} too short, need {needed}")]
    PathTooShort { len: usize, needed: usize },
    #[error("insufficient data for fit: {0}")]
    InsufficientData(String),
    #[error("orbit hits zero after {emitted} digits")]
    OrbitHitsZero { emitted: usize },
    #[error("map undefined at a branch end")]
    UndefinedAtBranchEnd,
    #[error("condition {condition} violated: {detail}")]
    ConditionViolated { condition: u8, detail: String },
    #[error("ulam iteration did not converge (residual {residual:e})")]
    NotConverged { residual: f64 },
    #[error("invariant density is not strictly positive")]
    DensityNotPositive,
    #[error("branch {0} out of range")]
    BranchOutOfRange(u64),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyWord => "EmptyWord",
            Error::InvalidDigit { .. } => "InvalidDigit",
            Error::RationalTermination { .. } => "RationalTermination",
            Error::PrecisionExhausted { .. } => "PrecisionExhausted",
            Error::UndefinedAtZero => "UndefinedAtZero",
            Error::DomainError(_) => "DomainError",
            Error::NoWitnessFound => "NoWitnessFound",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::ZeroMassEncountered { .. } => "ZeroMassEncountered",
            Error::InfiniteEntropy => "InfiniteEntropy",
            Error::InfiniteLogMoment => "InfiniteLogMoment",
            Error::PathTooShort { .. } => "PathTooShort",
            Error::InsufficientData(_) => "InsufficientData",
            Error::OrbitHitsZero { .. } => "OrbitHitsZero",
            Error::UndefinedAtBranchEnd => "UndefinedAtBranchEnd",
            Error::ConditionViolated { .. } => "ConditionViolated",
            Error::NotConverged { .. } => "NotConverged",
            Error::DensityNotPositive => "DensityNotPositive",
            Error::BranchOutOfRange(_) => "BranchOutOfRange",
        }
    }
}
