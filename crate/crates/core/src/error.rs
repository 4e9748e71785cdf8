use thiserror::Error;

/// Errors surfaced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sample grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("turning point: lambda^2 - V <= 0 near x = {x}")]
    TurningPoint { x: f64 },
    #[error("potential tail too fat: {0}")]
    TailTooFat(String),
    #[error("Wronskian not constant: relative spread {spread:.3e}")]
    NonConstantWronskian { spread: f64 },
    #[error("WKB decomposition unavailable: {0}")]
    WkbUnavailable(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("lemma hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("time {t} exceeds the finite-box horizon {t_safe}")]
    HorizonExceeded { t: f64, t_safe: f64 },
    #[error("broadening too narrow: eta = {eta:.3e}, local spacing = {spacing:.3e}")]
    BroadeningTooNarrow { eta: f64, spacing: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
