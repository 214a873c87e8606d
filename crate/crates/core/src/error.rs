use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("graph is disconnected: vertex {u} (component {comp_u}) and vertex {v} (component {comp_v})")]
    Disconnected {
        u: usize,
        v: usize,
        comp_u: usize,
        comp_v: usize,
    },

    #[error("rank {rank} exceeds cap {cap}; {advice}")]
    RankCap {
        rank: usize,
        cap: usize,
        advice: &'static str,
    },

    #[error("plan too large: {0}")]
    PlanTooLarge(String),

    #[error("kernel is not ({c}, {l})-multiplicatively Lipschitz: ratio {ratio:e} at z = {z:e}, c = {scale}")]
    NotLipschitz {
        c: f64,
        l: f64,
        z: f64,
        scale: f64,
        ratio: f64,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("iteration cap exceeded: {0}")]
    IterationCap(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Stable tag for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Domain(_) => "domain",
            Self::InvalidInput(_) => "invalid-input",
            Self::DimensionMismatch { .. } => "dimension-mismatch",
            Self::Disconnected { .. } => "disconnected",
            Self::RankCap { .. } => "rank-cap",
            Self::PlanTooLarge(_) => "plan-too-large",
            Self::NotLipschitz { .. } => "not-lipschitz",
            Self::NoConvergence { .. } => "no-convergence",
            Self::IterationCap(_) => "iteration-cap",
            Self::Singular(_) => "singular",
            Self::Parse(_) => "parse",
            Self::Io(_) => "io",
            Self::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
