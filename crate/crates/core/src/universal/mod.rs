//! From a contractive state-affine system to an echo state network, and the
//! practical random-reservoir pipeline with a trained linear readout.

mod budget;
mod construct;
mod nn;
mod pipeline;
mod readout;
mod targets;

pub use budget::{epsilon2, make_error_budget, ErrorBudget};
pub use construct::{sas_image_sup, sas_to_esn, SasToEsnConfig, SasToEsnReport, SAS_INPUT_RADIUS};
pub use nn::{
    assemble_esn, fit_nn_reservoir, fit_output_weights, random_features, FitAttempt, FitConfig, FitDomain, NnFit,
    NnReservoirParams,
};
pub use pipeline::{
    end_to_end_approximate, esn_output_filter, ConstructiveConfig, EvaluationReport, Pipeline, PracticalConfig,
};
pub use readout::{fit_readout, train_readout};
pub use targets::{narma_outputs, TargetFilter, VolterraTerm};
