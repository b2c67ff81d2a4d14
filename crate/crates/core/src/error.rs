use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("graph is disconnected ({components} components); a connected undirected graph is required")]
    Disconnected { components: usize },

    #[error("malformed edge ({0}, {1}): {2}")]
    MalformedEdge(usize, usize, String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite parameter vector passed to {0}")]
    NumericDomain(&'static str),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("schema error at line {line}: {reason}")]
    Schema { line: usize, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("sampler diverged at tick {tick} (agent {agent}); the step size is likely too large")]
    Divergence { tick: u64, agent: usize },

    #[error(
        "fusion weight condition violated: beta(1-beta) = {lhs:.6} >= 1/(2 lambda_(n-1)) = {rhs:.6} \
         (beta = {beta}, lambda_(n-1) = {lambda_n_minus_1:.6})"
    )]
    Condition {
        beta: f64,
        lambda_n_minus_1: f64,
        lhs: f64,
        rhs: f64,
    },

    #[error("degenerate bound: alpha*rho_U + ln(sqrt(lambda)) is exactly zero")]
    DegenerateCase,

    #[error("empty sample set passed to {0}")]
    EmptyInput(&'static str),

    #[error(
        "posterior grid leaks mass at the boundary (edge/max = {ratio:.3e}); widen the ranges to at least \
         [{suggest_lo0:.2}, {suggest_hi0:.2}] x [{suggest_lo1:.2}, {suggest_hi1:.2}]"
    )]
    GridLeak {
        ratio: f64,
        suggest_lo0: f64,
        suggest_hi0: f64,
        suggest_lo1: f64,
        suggest_hi1: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing data file {path}: {hint}")]
    MissingData { path: PathBuf, hint: String },

    #[error("no run manifest found in {0}")]
    MissingManifest(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidTopology(_)
            | Error::Disconnected { .. }
            | Error::MalformedEdge(..)
            | Error::InvalidParameter { .. }
            | Error::Condition { .. }
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Schema { .. } => 2,
            Error::Divergence { .. } | Error::NumericDomain(_) => 3,
            Error::MissingData { .. } | Error::MissingManifest(_) => 4,
            _ => 1,
        }
    }
}
