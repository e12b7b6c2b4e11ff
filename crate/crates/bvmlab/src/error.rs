use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient fields live on different bases: {0}")]
    BasisMismatch(String),
    #[error("level {level} outside the basis range")]
    LevelOutOfRange { level: i64 },
    #[error("synthesis grid of size {grid} too coarse for {dim} coordinates (need a power of two >= dim)")]
    GridTooCoarse { grid: usize, dim: usize },
    #[error("sup-norm Hoelder flavor requires a dyadic wavelet basis")]
    HolderOnTrigonometric,
    #[error("norm flavor not usable here: {0}")]
    IncompatibleNorm(String),
    #[error("scale sequence must be strictly positive (level {level})")]
    NonPositiveScale { level: i64 },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("sample count {got} too small: need at least {min}")]
    SampleCountTooSmall { got: usize, min: usize },
    #[error("operation requires a dyadic wavelet basis")]
    WaveletRequired,
    #[error("operation requires the trigonometric basis")]
    TrigonometricRequired,
    #[error("linear functional representer is identically zero")]
    ZeroFunctional,
    #[error("all quadrature log-weights underflowed; grid placement bug for x={x}, sigma={sigma}, n={n}")]
    NumericalUnderflow { x: f64, sigma: f64, n: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
