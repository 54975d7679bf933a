//! Error type for generation, metrics, and the replication harness.

/// Errors raised by the simulation crate.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    /// An estimator or data-handling error bubbled up unchanged.
    #[error(transparent)]
    Core(#[from] fsim_core::Error),
    /// The study specification is unusable as stated.
    #[error("invalid study spec: {0}")]
    Spec(String),
    /// Too large a share of replications failed to produce an estimate.
    #[error(
        "{failed} of {total} replications failed (more than the 20% limit); \
         first failure at replication {first_replication} (seed {first_seed}): {first_message}"
    )]
    TooManyFailures {
        failed: usize,
        total: usize,
        first_replication: usize,
        first_seed: u64,
        first_message: String,
    },
    /// A report could not be serialized or parsed.
    #[error("report serialization: {0}")]
    Serialize(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;
