use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("|p(z)| = {modulus:e} is below the evaluation guard {guard:e}")]
    DenominatorTooSmall { modulus: f64, guard: f64 },
    #[error("radial limit did not settle: last extrapolations differ by {gap:e}")]
    NoConvergence { gap: f64 },
    #[error("polynomial nearly vanishes inside the bidisc: min |p| = {min_modulus:e}")]
    InstabilityDetected { min_modulus: f64 },
    #[error("target value has modulus {modulus}, expected 1")]
    NonUnimodularTarget { modulus: f64 },
    #[error("source point is not a singularity: |p| = {modulus:e}")]
    SourceNotSingular { modulus: f64 },
    #[error("weight exponent {beta} must exceed -1")]
    UnsupportedWeight { beta: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("singularity mismatch: {0}")]
    SingularityMismatch(String),
    #[error("only {bins} non-empty envelope bins (need at least {required})")]
    EnvelopeTooSparse { bins: usize, required: usize },
    #[error("beta = {beta} does not exceed 2q = {two_q}")]
    BetaTooSmall { beta: f64, two_q: f64 },
}

impl Error {
    /// Stable variant name, used on the CLI diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DenominatorTooSmall { .. } => "DenominatorTooSmall",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::InstabilityDetected { .. } => "InstabilityDetected",
            Error::NonUnimodularTarget { .. } => "NonUnimodularTarget",
            Error::SourceNotSingular { .. } => "SourceNotSingular",
            Error::UnsupportedWeight { .. } => "UnsupportedWeight",
            Error::DegenerateFit(_) => "DegenerateFit",
            Error::SingularityMismatch(_) => "SingularityMismatch",
            Error::EnvelopeTooSparse { .. } => "EnvelopeTooSparse",
            Error::BetaTooSmall { .. } => "BetaTooSmall",
        }
    }
}
