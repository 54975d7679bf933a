//! Synthetic data generation and Monte Carlo evaluation for the
//! single-index functional regression estimator.
//!
//! [`models`] draws seeded datasets from two synthetic designs, [`metrics`]
//! scores fitted curves and predictions against the generating truth, and
//! [`mc`] runs replicated studies and aggregates them into a report. All
//! randomness flows through the splittable streams in [`rng`], so every
//! report is reproducible from its spec alone.

pub mod error;
pub mod mc;
pub mod metrics;
pub mod models;
pub mod rng;

pub use error::{Result, SimError};
pub use mc::{monte_carlo, replication_data, Aggregates, FailureRecord, McReport, RepRecord, SimSpec};
pub use metrics::{mae_prediction, mean_abs_deviation, mise};
pub use models::{
    generate, generate_model41, generate_model41_with, generate_model42, generate_model42_with,
    LinkTruth, Model, SimulatedData, TruthBundle,
};
