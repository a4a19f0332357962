//! LQG flight control and cinematographic trajectory planning for generic
//! rotary-wing drones.
//!
//! The crate is organized bottom-up:
//!
//! - [`dynamics`]: first-order translation/heading model and a noisy plant
//! - [`estimation`]: discrete time-varying Kalman filter
//! - [`regulation`]: Riccati feedback, pre-filters and the control law
//! - [`cinematography`]: shot sentences and camera placement on spheres and
//!   toric surfaces around actors
//! - [`planning`]: reference trajectories, steered or analytic
//! - [`harness`]: scenarios, the closed-loop simulator, logs and metrics
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for the common cases. The harness works in `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cinematography;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod planning;
pub mod regulation;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FlightCommand = dynamics::FlightCommand<f64>;
pub type DroneGains = dynamics::DroneGains<f64>;
pub type TranslationState = dynamics::TranslationState<f64>;
pub type HeadingState = dynamics::HeadingState<f64>;
pub type NoiseModel = dynamics::NoiseModel<f64>;
pub type Plant = dynamics::Plant<f64>;
pub type KalmanState<const N: usize> = estimation::KalmanState<f64, N>;
pub type LinearGaussianModel<const N: usize, const M: usize, const Q: usize> =
    estimation::LinearGaussianModel<f64, N, M, Q>;
pub type RegulatorWeights = regulation::RegulatorWeights<f64>;
pub type HeadingRegulatorConfig = regulation::HeadingRegulatorConfig<f64>;
pub type GainSet = regulation::GainSet<f64>;
pub type Regulator = regulation::Regulator<f64>;
pub type ManifoldCoords = cinematography::ManifoldCoords<f64>;
pub type MappingTables = cinematography::MappingTables<f64>;
pub type ActorPose = cinematography::ActorPose<f64>;
pub type CameraPose = cinematography::CameraPose<f64>;
pub type ReferenceSample = planning::ReferenceSample<f64>;
pub type SteeringConfig = planning::SteeringConfig<f64>;
pub type PathSegment = planning::PathSegment<f64>;
pub type ActorTrack = planning::ActorTrack<f64>;

/// Single-precision aliases for embedded-style use of the numeric core.
pub mod f32 {
    pub type FlightCommand = crate::dynamics::FlightCommand<f32>;
    pub type DroneGains = crate::dynamics::DroneGains<f32>;
    pub type TranslationState = crate::dynamics::TranslationState<f32>;
    pub type NoiseModel = crate::dynamics::NoiseModel<f32>;
    pub type Plant = crate::dynamics::Plant<f32>;
    pub type Regulator = crate::regulation::Regulator<f32>;
    pub type GainSet = crate::regulation::GainSet<f32>;
}
