//! Reservoir computing with contraction certificates.
//!
//! The crate is generic over the scalar type (`f32` or `f64`, see [`Real`]);
//! the aliases at the bottom of this file fix `f64` for everyday use.

pub mod error;
pub mod filtercore;
pub mod linalg;
pub mod models;
pub mod reservoir;
pub mod rng;
mod scalar;
pub mod seqspace;
pub mod universal;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Signal = seqspace::BoundedSignal<f64>;
pub type Weighting = seqspace::WeightingSequence<f64>;
pub type Filter = filtercore::Filter<f64>;
pub type Functional = filtercore::Functional<f64>;
pub type System = reservoir::ReservoirSystem<f64>;
pub type Certificate = reservoir::ContractionCertificate<f64>;
pub type Esn = models::EsnParams<f64>;
pub type Sas = models::SasParams<f64>;
pub type Model = models::Model<f64>;
pub type NnReservoir = universal::NnReservoirParams<f64>;
