use thiserror::Error;

/// Errors raised by the path, engine, strategy and hedging layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("strategy `{label}` exceeded its stake bounds (|M| ≤ {bound_m}, |V| ≤ {bound_v}) at grid index {index} (M={m}, V={v})")]
    StakeBound {
        label: String,
        index: usize,
        m: f64,
        v: f64,
        bound_m: f64,
        bound_v: f64,
    },

    #[error("non-finite capital for `{label}` at grid index {index}")]
    Numeric { label: String, index: usize },

    #[error("positivity fault: `{label}` reached capital {capital} at grid index {index}")]
    Positivity {
        label: String,
        index: usize,
        capital: f64,
    },

    #[error("derivative bound breached at stage {stage}: |{which}| = {value} > {bound}")]
    DerivativeBound {
        stage: usize,
        which: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("convolution dimension {dims} exceeds the cap {cap}")]
    DimensionCap { dims: usize, cap: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
