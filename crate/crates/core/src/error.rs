use thiserror::Error;

/// Errors produced by tensor I/O, feature extraction and generation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("index error at line {line}: index {value} is not a positive 1-based index")]
    Index { line: usize, value: i128 },

    #[error("bounds error at line {line}: index {index} exceeds size {dim} of mode {mode}")]
    Bounds {
        line: usize,
        mode: usize,
        index: u64,
        dim: u64,
    },

    #[error("duplicate coordinate at line {line} (first seen at line {first})")]
    Duplicate { line: usize, first: usize },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("arity error: expected {expected} modes, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("dense oracle needs {cells} cells, cap is {cap}")]
    OracleCap { cells: u128, cap: u128 },

    #[error("statistic over an empty domain (n_all = 0)")]
    EmptyDomain,

    #[error("count {0} is not positive")]
    NonPositiveCount(u64),

    #[error("unsupported tensor order {0}; at least 3 modes are required")]
    UnsupportedOrder(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("grouping method needs {needed} auxiliary words, cap is {cap}")]
    GroupingMemory { needed: u128, cap: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cannot draw {n} distinct indices from [1, {limit}]")]
    Capacity { n: u64, limit: u64 },

    #[error("empty spec: {0}")]
    EmptySpec(String),

    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),

    #[error("incomplete feature set: missing {0}")]
    IncompleteFeature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
