//! Robust training under noisy labels with the Pumpout policy: gradient
//! descent on samples that meet a fitting condition and `γ`-scaled gradient
//! ascent on the rest.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the crate-root
//! aliases fix it to `f64`, which the trainers and tolerances assume.

pub mod correction;
mod error;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod noise;
pub mod optim;
pub mod rng;
mod scalar;
pub mod schedule;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type Network = nn::Network<Real>;
pub type GradientSet = nn::GradientSet<Real>;
pub type LossVector = nn::LossVector<Real>;
pub type Matrix = matrix::Matrix<Real>;
pub type TransitionMatrix = noise::TransitionMatrix<Real>;
pub type CorrectedLoss = correction::CorrectedLoss<Real>;
pub type KeepSchedule = schedule::KeepSchedule<Real>;
pub type OptimizerState = optim::OptimizerState<Real>;
pub type TrainConfig = train::TrainConfig<Real>;
pub type TrainOutcome = train::TrainOutcome<Real>;
