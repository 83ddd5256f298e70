//! Digital twin of a nanofiber-probed magneto-optical trap.
//!
//! The crate forward-simulates the photon count rate that trapped-atom
//! fluorescence couples into a tapered nanofiber (and the companion
//! photodiode voltage), then recovers trap characteristics — cloud profile,
//! loading time, lifetime — from the synthetic signals.
//!
//! * [`physics`] — scattering rate, photon budget, photon energy.
//! * [`cloud`] — parametric density fields and the sensing-shell overlap.
//! * [`dynamics`] — rate-equation evolution and the schedule simulator.
//! * [`detector`] — Poisson photon counting and the photodiode chain.
//! * [`scan`] — cloud-translation profiles and the camera cross-section.
//! * [`fit`] — Gauss-Newton fits for the three signal families.
//! * [`config`] / [`series`] — experiment description and channel data.
//!
//! All quantities are generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix the common choice.

pub mod cloud;
pub mod config;
pub mod detector;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod physics;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod scan;
pub mod series;

pub use error::{Error, Result};
pub use rng::SplitMix64;
pub use scalar::{Real, Vec3};

/// Double-precision instantiations used by the command-line front end.
pub type LaserConfig64 = physics::LaserConfig<f64>;
pub type FiberSpec64 = physics::FiberSpec<f64>;
pub type PhotonBudget64 = physics::PhotonBudget<f64>;
pub type CloudModel64 = cloud::CloudModel<f64>;
pub type RegimeParams64 = cloud::RegimeParams<f64>;
pub type SpcmSpec64 = detector::SpcmSpec<f64>;
pub type PhotodiodeSpec64 = detector::PhotodiodeSpec<f64>;
pub type TrapDynamics64 = dynamics::TrapDynamics<f64>;
pub type Schedule64 = dynamics::Schedule<f64>;
pub type ExperimentConfig64 = config::ExperimentConfig<f64>;
pub type TimeSeries64 = series::TimeSeries<f64>;
pub type FitResult64 = fit::FitResult<f64>;
pub type FitOptions64 = fit::FitOptions<f64>;
