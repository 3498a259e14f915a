//! Disaggregation of daily energy profiles into a fixed load, factored by
//! non-negative matrix factorization, and shiftable appliance loads, coded as
//! L0-limited binary selections over sparse pulse dictionaries.
//!
//! All numeric code is generic over [`Scalar`]; the aliases at the crate
//! root fix it to `f64` (and `f32` where a `32` suffix is used).

pub mod basis;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod fixed;
pub mod hillclimb;
pub mod model;
pub mod objective;
pub mod scalar;
pub mod synth;
pub mod trainer;

pub use basis::{BasisKind, SparseBinaryBasis};
pub use config::{ClassConfig, ModelConfig, Order, UpdateRule};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset = model::EnergyDataset<f64>;
pub type Model = model::DisaggregationModel<f64>;
pub type FixedFactors = model::FixedLoadFactors<f64>;
pub type ShiftableClass = model::ShiftableLoadClass<f64>;
pub type GroundTruth = data::ApplianceGroundTruth<f64>;

pub type Dataset32 = model::EnergyDataset<f32>;
pub type Model32 = model::DisaggregationModel<f32>;
