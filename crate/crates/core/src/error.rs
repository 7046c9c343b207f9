//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by the library. Variants map onto the CLI exit-code
/// contract: validation/domain problems are configuration errors, resource
/// limits are reported separately so callers can suggest smaller inputs.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (bad pattern, bad structure, bad table).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configured cap (enumeration size, pair-term budget) was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Parameters that make the requested statistic undefined (e.g. σ = 0).
    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    /// An evaluation point outside a table's or theorem's validity range.
    #[error("range error: {0}")]
    Range(String),

    /// A generator that cannot perform the requested conditional resampling.
    #[error("capability error: {0}")]
    Capability(String),
}

pub type Result<T> = std::result::Result<T, Error>;
