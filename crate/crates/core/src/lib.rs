//! Maximum discrepancy non-negative matrix factorization.
//!
//! Bases are trained with a weak (reconstruction) term, an adversarial term that pushes each
//! basis away from data of the other sources, and a strong term fitting known mixture
//! components jointly. Mixtures are separated by joint sparse coding and Wiener filtering.

pub mod adversarial;
pub mod audio;
pub mod encode;
pub mod error;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod separator;
pub mod synthetic;
pub mod trainer;
pub mod tuning;
pub mod variant;

pub use error::{Error, Result};
pub use model::{Basis, EncodeConfig, Latent};
pub use scalar::Scalar;
pub use loss::TermWeights;
pub use trainer::{train, TrainConfig, TrainOutput, TrainingSet, SourceBundle};
pub use separator::{separate, SeparationConfig};
pub use variant::Variant;

/// Double-precision aliases.
pub type Basis64 = Basis<f64>;
pub type Latent64 = Latent<f64>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type TrainingSet64 = TrainingSet<f64>;
pub type SeparationConfig64 = SeparationConfig<f64>;

/// Single-precision aliases.
pub type Basis32 = Basis<f32>;
pub type Latent32 = Latent<f32>;
pub type TrainConfig32 = TrainConfig<f32>;
pub type TrainingSet32 = TrainingSet<f32>;
pub type SeparationConfig32 = SeparationConfig<f32>;
