use std::path::PathBuf;

use crate::model::CandidateId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid pod spec: {field} {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: u64,
        column: String,
        reason: String,
    },

    #[error("duplicate candidate id `{0}`")]
    DuplicateId(CandidateId),

    #[error("snapshot timestamps are not strictly increasing ({previous} then {next})")]
    NonMonotonicTimestamps { previous: i64, next: i64 },

    #[error("no candidate can host a single pod of the requested shape")]
    NoFeasibleCandidates,

    #[error("candidate set is empty")]
    EmptyCandidateSet,

    /// `available` is the pod capacity of the offered candidates (Σ Pod_i·T3_i);
    /// `excluded` is the capacity withheld by the unavailable-offerings cache.
    #[error(
        "insufficient capacity: demand {demand} pods, available {available} \
         (gap {gap}; {excluded} pods withheld by excluded offerings)",
        gap = demand.saturating_sub(*available)
    )]
    InsufficientCapacity {
        demand: u64,
        available: u64,
        excluded: u64,
    },

    #[error("residual demand {demand} exceeds the solver limit of {limit} pods")]
    ProblemTooLarge { demand: u64, limit: u64 },

    #[error("enumeration space {size} exceeds the oracle limit of {limit}")]
    OracleTooLarge { size: u128, limit: u128 },

    #[error("allocation is empty")]
    EmptyAllocation,

    #[error("allocation covers {allocated} pods but {requested} were requested")]
    UncoveredAllocation { allocated: u64, requested: u64 },

    #[error("no candidate passes the availability filter (threshold {threshold})")]
    NoCandidatesPassFilter { threshold: f64 },

    #[error("unknown candidate `{0}`")]
    UnknownCandidate(CandidateId),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The underlying error with any file context peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn parse(line: u64, column: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column: column.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
