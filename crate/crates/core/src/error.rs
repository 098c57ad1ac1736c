use thiserror::Error;

/// Unified error type for the whole engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Shapes, arities, or graph structure do not line up.
    #[error("structural error: {0}")]
    Structure(String),

    /// A configuration value violates its allowed range.
    #[error("config error: {0}")]
    Config(String),

    /// Non-finite arithmetic where finite values are required.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// No single wiring source for a port clears the presence threshold.
    #[error(
        "ambiguous wiring at layer {layer} unit {unit} port {port}: \
         top softmax entries {top1:.6} and {top2:.6}, threshold tau {tau}"
    )]
    AmbiguousWiring {
        layer: usize,
        unit: usize,
        port: usize,
        top1: f64,
        top2: f64,
        tau: f64,
    },

    /// No single source for a designated output clears the threshold.
    #[error(
        "ambiguous output {output}: top selector entry {top:.6}, threshold tau {tau}"
    )]
    AmbiguousOutput { output: usize, top: f64, tau: f64 },

    /// A text artifact failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
