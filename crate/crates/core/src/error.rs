use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller passed arguments of the wrong shape (dimension mismatch etc.).
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The moduli point lies outside the region where the construction is valid.
    #[error("invalid moduli point: {0}")]
    InvalidModuli(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    /// The element fixes q_inf, so it has no isometric sphere.
    #[error("word {0} fixes q_inf")]
    FixesInfinity(String),
    #[error("degenerate chart: {0}")]
    DegenerateChart(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("no sign change: {0}")]
    NoSignChange(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
