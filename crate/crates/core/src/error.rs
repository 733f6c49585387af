use std::path::PathBuf;

use thiserror::Error;

use crate::op::OpKind;
use crate::trace::{SiteId, TraceRecord};

/// An atomic operation received operands outside its mathematical domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainError {
    pub site: SiteId,
    pub op: OpKind,
    pub operands: Vec<f64>,
    /// Records of every operation that completed before the failing one.
    /// Empty when the failing evaluation was not traced.
    pub partial_trace: Vec<TraceRecord>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown corpus function `{0}`")]
    UnknownFunction(String),

    #[error("unknown operation `{0}`")]
    UnknownOp(String),

    #[error("{function} takes {expected} input(s), got {got}")]
    Arity {
        function: String,
        expected: usize,
        got: usize,
    },

    #[error("{} at {} outside its domain (operands {:?})", .0.op, .0.site, .0.operands)]
    Domain(Box<DomainError>),

    #[error("site {0} was not executed")]
    SiteNotExecuted(SiteId),

    #[error("{function} has no site {index}")]
    NoSuchSite { function: String, index: usize },

    #[error("record at {site} cannot be conditioned: {reason}")]
    InvalidRecord { site: SiteId, reason: &'static str },

    #[error("high-precision {op} at {site} outside its domain")]
    OracleDomain { site: SiteId, op: OpKind },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<DomainError> for Error {
    fn from(e: DomainError) -> Self {
        Error::Domain(Box::new(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
