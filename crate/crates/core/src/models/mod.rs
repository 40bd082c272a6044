//! Echo state networks and state-affine systems with their contraction
//! certificates, plus JSON model files.

mod activation;
mod esn;
pub mod io;
mod sas;

pub use activation::{scan as scan_activation, Activation, ActivationScan};
pub use esn::{EsnParams, RandomEsn};
pub use io::{load_model, model_from_json, model_to_json, save_model, Model, SasModel};
pub use sas::{multi_indices, sas_certificate, MultiIndex, RandomSas, SasParams, SasVerdict, STRICT_MARGIN};
