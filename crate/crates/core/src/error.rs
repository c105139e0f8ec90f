use thiserror::Error;

/// Errors produced across the solver, search and control layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// `1 - w^2 C L1` is not positive, so the patch branch is past resonance.
    #[error("element circuit at or past series resonance (1 - w^2*C*L1 = {factor:.4})")]
    Resonance { factor: f64 },

    /// The cascade denominator vanished; the stack is singular at this point.
    #[error("degenerate stack: transmission denominator magnitude {magnitude:e}")]
    DegenerateStack { magnitude: f64 },

    #[error(
        "susceptance span [{target_min}, {target_max}] S is not reachable; best achievable is [{best_min}, {best_max}] S"
    )]
    Calibration {
        target_min: f64,
        target_max: f64,
        best_min: f64,
        best_max: f64,
    },

    #[error("search failed: {0}")]
    Search(String),

    #[error("probe budget violated: {0}")]
    Budget(String),

    #[error("feedback oracle failed: {0}")]
    Oracle(String),

    #[error("scenario error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_frequency(frequency: f64) -> Result<()> {
    if frequency.is_finite() && frequency > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "frequency must be positive and finite, got {frequency}"
        )))
    }
}
