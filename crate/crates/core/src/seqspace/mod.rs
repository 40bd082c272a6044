//! Uniformly bounded left-infinite signals and the weighted norms and metrics on them.

pub mod csv;
mod norms;
mod signal;
mod weighting;

pub use norms::{sample_km, sup_norm, tail_divergence_bound, weighted_metric, weighted_norm, NormReport};
pub use signal::{BoundedSignal, Padding};
pub use weighting::WeightingSequence;
