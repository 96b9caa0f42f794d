use thiserror::Error;

/// Errors raised by the toolkit. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input (bad radius, non-finite coordinate, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A query reaches outside the region where a field or measure is valid.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested scale lies below what the discretization can resolve.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// The input lacks data required by the operation (e.g. scalar-only density
    /// where the full curvature is needed).
    #[error("capability error: {0}")]
    Capability(String),

    #[error("empty measure: {0}")]
    EmptyMeasure(String),

    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resolution(msg: impl Into<String>) -> Self {
        Error::Resolution(msg.into())
    }

    pub fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what} has non-finite coordinates")))
    }
}

pub(crate) fn check_radius(r: f64, what: &str) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{what} must be a positive finite radius, got {r}")))
    }
}
