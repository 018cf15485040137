use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit-code
/// classes: `InvalidArgument` and `Parse` are configuration errors,
/// `ResourceLimit` is a budget error, everything else is a named
/// mathematical failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("no separation: the two measures are equal")]
    NoSeparation,
    #[error("every fiber at period {period} is empty")]
    EmptyFiber { period: usize },
    #[error("mass deficit: {0}")]
    MassDeficit(String),
    #[error("fiber mismatch: {0}")]
    FiberMismatch(String),
    #[error("balance violation: {0}")]
    BalanceViolation(String),
    #[error("extraction failed: {0}")]
    ExtractionFailed(String),
    #[error("translate shortfall: selected {achieved} of {target} translates")]
    Shortfall { achieved: usize, target: usize },
    #[error("block collision: {0}")]
    BlockCollision(String),
    #[error("target membership violated: {0}")]
    TargetMembership(String),
    #[error("no M with r/4 < H/M < r/2 for r = {r}, H = {h}")]
    NoMInRange { r: String, h: usize },
    #[error("no admissible delta: {0}")]
    DeltaNotFound(String),
    #[error("delta violation: {0}")]
    DeltaViolation(String),
    #[error("independence shortfall: {0}")]
    IndependenceShortfall(String),
    #[error("claim 2 violation: {0}")]
    Claim2Violation(String),
    #[error("claim 3 chain violation: {0}")]
    Claim3Chain(String),
    #[error("certificate invalid: {0}")]
    InvalidCertificate(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by bad input rather than by the mathematics.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::Parse(_))
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::ResourceLimit(_))
    }

    /// Stable kebab-case name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Parse(_) => "parse-error",
            Error::ResourceLimit(_) => "resource-limit",
            Error::NoSeparation => "no-separation",
            Error::EmptyFiber { .. } => "empty-fiber",
            Error::MassDeficit(_) => "mass-deficit",
            Error::FiberMismatch(_) => "fiber-mismatch",
            Error::BalanceViolation(_) => "balance-violation",
            Error::ExtractionFailed(_) => "extraction-failed",
            Error::Shortfall { .. } => "shortfall",
            Error::BlockCollision(_) => "block-collision",
            Error::TargetMembership(_) => "target-membership",
            Error::NoMInRange { .. } => "no-M-in-range",
            Error::DeltaNotFound(_) => "delta-not-found",
            Error::DeltaViolation(_) => "delta-violation",
            Error::IndependenceShortfall(_) => "independence-shortfall",
            Error::Claim2Violation(_) => "claim2-violation",
            Error::Claim3Chain(_) => "claim3-chain-violation",
            Error::InvalidCertificate(_) => "invalid-certificate",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
