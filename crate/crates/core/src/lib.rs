//! Convergence-rate certificates for underdamped Langevin dynamics
//!
//! ```text
//! dx = v dt
//! dv = -gamma v dt - grad U(x) dt + sqrt(2 gamma T) dB
//! ```
//!
//! The crate computes explicit exponential rates `sigma` from growth data of
//! the potential, checks every pointwise inequality those rates depend on,
//! and measures empirical decay rates by simulation for comparison.
//!
//! Module map:
//! - [`potential`]: potential families and growth-bound checkers
//! - [`certificate`]: the explicit constant chain and the bounded-Hessian route
//! - [`gamma`]: generator, carré du champ and Gamma-2 verification
//! - [`lyapunov`]: Lyapunov weight, drift and hypothesis checks
//! - [`dynamics`]: integrators, invariant sampling, autocorrelation
//! - [`spectral`]: grid estimates of local Poincaré constants
//! - [`harness`]: rate fitting, tail checks, config, reports, CLI

pub mod certificate;
pub mod dynamics;
pub mod error;
pub mod gamma;
pub mod harness;
pub mod lyapunov;
pub mod potential;
pub mod spectral;
pub mod stats;

pub use certificate::{Certificate, ModelParams, RhoK, RhoSource, VillaniCertificate};
pub use error::{Error, Result};
pub use potential::{Family, GrowthConstants, PhasePoint, PotentialModel, SingularParams};
