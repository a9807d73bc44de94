use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed almanac text.
    #[error("almanac parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// Kepler's equation did not converge within the iteration budget.
    #[error("Kepler iteration for PRN {prn} did not converge (residual {residual:e} rad)")]
    NonConvergence { prn: u32, residual: f64 },

    /// The weighted normal matrix is too ill-conditioned to invert.
    #[error("weighted geometry is numerically singular (condition estimate {condition:e})")]
    SingularGeometry { condition: f64 },

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// The LP solver exceeded its anti-cycling pivot budget.
    #[error("LP solver numerical failure: {0}")]
    NumericalFailure(String),

    /// Inflation hit its parameter ceiling with a constraint still failing.
    #[error("geometry cannot be screened: {0}")]
    Unscreenable(String),

    /// An aggregate operation received no data.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Post-inflation verification failed; this is an integrity bug, never
    /// a tolerable data condition.
    #[error("integrity verification failed at epoch {epoch_s} s (worst margin {margin} m)")]
    IntegrityVerification { epoch_s: u32, margin: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("report serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
