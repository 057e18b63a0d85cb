//! Constellation design, error-rate analysis and covertness evaluation for
//! non-coherent fast-forward full-duplex (NC-FFFD) relaying against a
//! reactive jammer.
//!
//! The closed-form modules ([`numerics`], [`model`], [`relay`], [`sep`]) are
//! generic over [`Scalar`] (`f32` or `f64`). Optimizers, the Monte Carlo
//! simulator and the adversary models run in `f64`; the aliases below name
//! the `f64` instantiations.

pub mod adversary;
pub mod error;
pub mod model;
pub mod numerics;
pub mod optimizer;
pub mod relay;
pub mod scalar;
pub mod sep;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SystemConfig = model::SystemConfig<f64>;
pub type Constellation = model::Constellation<f64>;
pub type SumLevels = model::SumLevels<f64>;
pub type CrossoverProbs = relay::CrossoverProbs<f64>;
pub type SepBreakdown = sep::SepBreakdown<f64>;
pub type Tolerance = numerics::Tolerance<f64>;

pub type SystemConfig32 = model::SystemConfig<f32>;
pub type Constellation32 = model::Constellation<f32>;
pub type SumLevels32 = model::SumLevels<f32>;
pub type CrossoverProbs32 = relay::CrossoverProbs<f32>;
pub type SepBreakdown32 = sep::SepBreakdown<f32>;
pub type Tolerance32 = numerics::Tolerance<f32>;
