use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),
    #[error("invalid background profile: {0}")]
    InvalidProfile(String),

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("inverted cell {cell} (signed area {area:e})")]
    InvertedCell { cell: usize, area: f64 },
    #[error("unmatched periodic pair: {0}")]
    UnmatchedPeriodicPair(String),
    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("remeshing failed: {0}")]
    RemeshFailure(String),

    #[error("time {t} outside slab [{t0}, {t1}]")]
    OutsideSlab { t: f64, t0: f64, t1: f64 },
    #[error("exact Riemann solver did not converge after {0} iterations")]
    RiemannNoConvergence(usize),

    #[error("singular diagonal block in row {0}")]
    SingularBlock(usize),
    #[error("GMRES breakdown: {0}")]
    GmresBreakdown(String),
    #[error("Newton iteration stalled at iterate {iterate} (residual {residual:e})")]
    NewtonStall { iterate: usize, residual: f64 },
    #[error("singular local Gram matrix on cell {0}")]
    SingularGram(usize),
    #[error("time step {tau:e} fell below the minimum {tau_min:e}")]
    TimestepUnderflow { tau: f64, tau_min: f64 },
    #[error("adaptation stalled: step {step} remeshed {count} times")]
    AdaptStall { step: usize, count: usize },
    #[error("steady computation did not converge within {0} adaptation levels")]
    NoConvergence(usize),
    #[error("rank-deficient reconstruction patch around cell {0}")]
    RankDeficientPatch(usize),

    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("parse error at line {line}, key `{key}`: {msg}")]
    Parse { line: usize, key: String, msg: String },
    #[error("value out of range for `{key}`: {msg}")]
    Range { key: String, msg: String },
    #[error("checkpoint schema version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
