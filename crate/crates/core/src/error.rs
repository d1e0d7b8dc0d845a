use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("potential does not provide a Hessian-vector product and finite differences are disabled")]
    MissingHvp,

    #[error("non-finite {what} encountered at t = {t}")]
    NonFiniteInput { what: &'static str, t: f64 },

    #[error("no event accepted after {evaluations} rate evaluations")]
    NonConvergence { evaluations: u64 },

    #[error("query time {t} outside of [0, {end}]")]
    OutOfRange { t: f64, end: f64 },

    #[error("gradient norm {norm:e} too small to define an event direction")]
    DegenerateGradient { norm: f64 },

    #[error("strategy `{strategy}` is not valid for {form} rates")]
    InvalidStrategy {
        strategy: &'static str,
        form: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid velocity: {0}")]
    InvalidVelocity(String),

    #[error("invalid `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}
