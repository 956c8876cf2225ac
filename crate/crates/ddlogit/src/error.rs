//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, DdError>;

/// Errors produced by history construction, model solving, and estimation.
#[derive(Debug, Error)]
pub enum DdError {
    /// A choice history violated a structural invariant.
    #[error("invalid history: {0}")]
    InvalidHistory(String),

    /// Full enumeration of histories would exceed the configured cap.
    #[error("enumeration too large: (J+1)^T = {total} exceeds cap {cap}")]
    EnumerationTooLarge {
        /// Number of histories that would be enumerated.
        total: u128,
        /// Configured cap.
        cap: u128,
    },

    /// Fixed-point iteration failed to reach the tolerance.
    #[error("value iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        /// Final sup-norm residual.
        residual: f64,
        /// Iterations performed.
        iterations: usize,
    },

    /// A variant and a history (or model) disagree on dimensions.
    #[error("variant mismatch: {0}")]
    VariantMismatch(String),

    /// Histories with different (J, T, y0, d1) were mixed in one grouping.
    #[error("mixed initial conditions: {0}")]
    MixedGroup(String),

    /// The data contain no within-class variation in the identifying statistics.
    #[error("no identifying variation in the data")]
    NoIdentifyingVariation,

    /// A linear system was singular or rank deficient.
    #[error("singular matrix in {context} (numerical rank {rank})")]
    SingularMatrix {
        /// Where the failure occurred.
        context: String,
        /// Numerical rank detected.
        rank: usize,
    },

    /// A probe pair was requested for a horizon that cannot host it.
    #[error("horizon too short: pair at n = {n} requires {requirement} but T = {t}")]
    HorizonTooShort {
        /// Requested duration index.
        n: u32,
        /// Available horizon.
        t: usize,
        /// Human-readable requirement, e.g. "2n+1 <= T".
        requirement: String,
    },

    /// An outer optimizer failed to converge.
    #[error("optimizer did not converge: {0}")]
    Optimization(String),

    /// A requested named component was not present in a fit.
    #[error("unknown parameter component: {0}")]
    UnknownComponent(String),

    /// Configuration file or CLI argument problem.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV parse/serialize failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
