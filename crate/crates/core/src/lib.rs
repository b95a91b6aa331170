//! Stochastic simulation of quantum measurement at desk scale.
//!
//! A microsystem with `n` decay/scattering channels is coupled to a
//! macroscopic apparatus modeled entirely by `±1` stochastic sign variables.
//! Channel weights are multiplicatively enhanced or inhibited by the signs,
//! which turns the conditional channel probabilities into a random walk on
//! the probability simplex. Single runs collapse to a basis state with
//! Born-rule frequencies; the ensemble develops a multimodal distribution
//! over classical pointer variables.
//!
//! The crate is organized around that story:
//!
//! - [`state`] — complex amplitudes, density matrices, reduced (dephased)
//!   states, and two-body kinematics.
//! - [`apparatus`] — the sign-variable noise model, recursive channel
//!   enhancement factors, and their analytic correlation averages.
//! - [`walk`] — the single-measurement simplex random walk: step weights,
//!   moments, entropy drift, and full trajectory runs.
//! - [`ensemble`] — closed-form ensemble statistics: binomial pointer
//!   counts, the multimodal outcome distribution, Gaussian approximations,
//!   and ensemble entropy.
//! - [`sinks`] — the source/sink description of the scattering process and
//!   its nonlinear normalized density matrix.
//! - [`eikonal`] — the soft-photon emission factor of a classical point
//!   charge and the permutation partial-fraction identity behind its
//!   factorization.
//! - [`gedanken`] — a controllable one-step measurement analogue with a
//!   sign-flippable magnetic field.
//!
//! All stochastic sampling is keyed by `(seed, domain, index)` through
//! [`rng::stream_rng`], so any realization can be regenerated on any thread
//! in any order with identical results.

pub mod apparatus;
pub mod eikonal;
pub mod ensemble;
mod error;
pub mod gedanken;
pub mod rng;
pub mod sinks;
pub mod state;
pub mod stats;
pub mod walk;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex double-precision scalar used throughout.
pub type Complex64 = num_complex::Complex<f64>;
