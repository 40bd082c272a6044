//! Causal time-invariant filters and functionals, the `Ψ`/`Φ` correspondence
//! between them, and sampling probes for causality, time invariance and fading
//! memory.

mod filter;
mod functional;
pub mod probes;

pub use filter::{
    filter_from_functional, functional_from_filter, time_delay, time_delay_padded, Filter, FilterFlags, FilterOutput,
};
pub use functional::Functional;
pub use probes::{
    causality_probe, filter_distance_on, filter_sup_distance, filter_sup_estimate, fmp_probe, functional_sup_estimate,
    time_invariance_probe, PerturbationMode, ProbeReport, Witness,
};
