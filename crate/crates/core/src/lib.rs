//! Stationary Gaussian state of a cavity optomechanical system driven by a
//! laser with colored phase noise.
//!
//! The pipeline is: [`params::solve_steady_state`] → [`dynamics::build_model`]
//! → [`lyapunov::solve_model`] → [`lyapunov::reduce_to_optomechanical`] →
//! [`measures::log_negativity`] and [`measures::occupancy`]. The
//! [`spectral`] module integrates the same covariance in the frequency domain
//! and holds the closed-form approximations; [`stochastic`] checks the noise
//! model and the covariance by Monte-Carlo simulation.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod lyapunov;
pub mod matrix_doc;
pub mod measures;
pub mod params;
pub mod quadrature;
pub mod spectral;
pub mod stochastic;

pub use error::{Error, Result};
