//! Reservoir systems `x_t = F(x_{t−1}, z_t)`, `y_t = h(x_t)`, contraction
//! certificates, washout runs and the checks that compare two systems.

mod approx;
pub mod design;
mod run;
mod system;

pub use approx::{
    contraction_lower_bound, internal_approx_check, map_sup_distance, morphism_check, morphism_check_on,
    InternalApproxConfig, InternalApproxReport, SupBound,
};
pub use run::{
    generalized_filter, reservoir_filter, run_auto, run_filter, run_generalized, trajectory, washout_length,
    FilterView, RunOutput, RunSummary,
};
#[cfg(test)]
pub(crate) use system::scalar_linear;
pub use system::{
    domain_slack, CertificateMethod, ContractionCertificate, Readout, ReservoirSystem, StateMap, SystemSpec,
};
