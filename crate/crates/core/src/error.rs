use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("{what} evaluated outside its domain at r = {at}")]
    Domain { what: String, at: f64 },

    #[error("{0} is not in the catalog")]
    OutOfCatalog(String),

    #[error("integration failure at sigma = {sigma}: {reason}")]
    IntegrationFailure { sigma: f64, reason: String },

    #[error("direction {index}: {source}")]
    Direction {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("ill-conditioned at sigma = {sigma} (distance to nearest singular point {distance:.3e})")]
    Conditioning { sigma: f64, distance: f64 },

    #[error("evaluation point {re}{im:+}i lies within {distance:.3e} of a pole")]
    Pole { re: f64, im: f64, distance: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("extrapolation did not converge: {0}")]
    Convergence(String),

    #[error("degenerate structure: {0}")]
    Degenerate(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors caused by the caller's parameters rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Input(_)
            | Error::Configuration(_)
            | Error::OutOfCatalog(_)
            | Error::Unsupported(_) => true,
            Error::Direction { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
