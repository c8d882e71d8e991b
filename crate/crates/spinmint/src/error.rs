//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside its admissible domain
    /// (non-positive linewidth, fidelity outside `[1/2, 1]`, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Scenario configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical routine failed to reach its accuracy target
    /// (adaptive quadrature ran out of subdivisions, eigensolver failure, ...).
    #[error("numerics error: {0}")]
    Numerics(String),

    /// An optimizer stopped before reaching its convergence tolerance.
    /// The best point seen so far is embedded so callers can still inspect it.
    #[error("optimization did not converge: {message} (best f = {best_value:.6e} at {best_point:?})")]
    Optimization {
        message: String,
        best_point: Vec<f64>,
        best_value: f64,
    },

    /// A measurement branch has vanishing probability; the conditional state
    /// is undefined. Carries the offending branch probability.
    #[error("degenerate measurement branch: probability {0:.3e} below 1e-15")]
    DegenerateBranch(f64),

    /// Filesystem problems while writing reports.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Domain`].
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Convenience constructor for [`Error::Config`].
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Convenience constructor for [`Error::Numerics`].
    pub fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }
}
