use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative probability mass {value} at flat index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("non-finite probability mass at flat index {index}")]
    NonFinite { index: usize },

    #[error("masses sum to {sum}, deviation {deviation:e} exceeds tolerance")]
    NotNormalized { sum: f64, deviation: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),

    #[error("value {value} for `{what}` is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("information measure {value:e} is negative beyond numerical slack")]
    Inconsistent { value: f64 },

    #[error("source is not degraded: I(X;Z|Y) = {cmi:e}")]
    NotDegraded { cmi: f64 },

    #[error("alphabet size {size} for `{axis}` exceeds the cardinality bound {bound}")]
    CardinalityExceeded { axis: String, size: usize, bound: usize },

    #[error("no auxiliary pair satisfies the caps (leakage cap {l_cap} < I(X;Z) = {floor})")]
    InfeasibleCaps { l_cap: f64, floor: f64 },

    #[error("exact enumeration needs {work:e} work units, guard is {guard:e}")]
    TooLarge { work: f64, guard: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
