//! Generative diffusion in function space.
//!
//! A spectral Ornstein-Uhlenbeck reference process on L²([0,1]) (the
//! VP-SPDE, stationary at N(0,C)) is forced to hit a target measure at a
//! finite horizon T by an exponential change of measure. The added drift is
//! the steering function s(t,x) = D_x log h(t,x); for a two-component
//! Gaussian mixture target the steering is available in closed form, and in
//! general it is learned by score matching on exactly sampled
//! Ornstein-Uhlenbeck bridges.
//!
//! Modules
//! - [`spectral`]: sine basis, covariance spectra, coefficient/field maps.
//! - [`schedule`]: noise schedules β(t) and the per-mode kernel quantities.
//! - [`process`]: exact forward, transition, bridge and mollifier sampling.
//! - [`mixture`]: the tractable mixture target and its closed-form steering.
//! - [`nn`]: FiLM-conditioned residual score network with hand-rolled
//!   reverse-mode gradients and Adam.
//! - [`training`]: Monte-Carlo score-matching loss and the training loop.
//! - [`sampling`]: Langevin initialisation and semi-implicit Euler (IEM).
//! - [`metrics`]: sliced Wasserstein, score error, mode fraction, KS.
//! - [`csvio`]: CSV emission and parsing.
//!
//! Everything numerical is generic over the scalar type through
//! [`scalar::Scalar`]; the aliases below fix the default `f64` instantiation
//! used by the CLI and tests.

pub mod csvio;
pub mod error;
pub mod metrics;
pub mod mixture;
pub mod nn;
pub mod process;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod schedule;
pub mod spectral;
pub mod steering;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type of the command-line tools and tests.
pub type Real = f64;

pub type Spectrum = spectral::CovarianceSpectrum<Real>;
pub type Field = spectral::FieldCoefficients<Real>;
pub type Grid = spectral::BasisGrid;
pub type Schedule = schedule::NoiseSchedule<Real>;
pub type Process = schedule::ProcessSpec<Real>;
pub type Path = process::PathSample<Real>;
pub type Bridge = process::BridgePoint<Real>;
pub type Mixture = mixture::MixtureTarget<Real>;
pub type ScoreNet = nn::NetParams<Real>;
pub type Adam = nn::AdamState<Real>;
pub type TrainCfg = training::TrainConfig<Real>;
pub type SamplerCfg = sampling::SamplerConfig<Real>;
pub type Generation = sampling::GenerationResult<Real>;
