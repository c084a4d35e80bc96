//! Monte Carlo engine for the Kyle-Back insider trading equilibrium when the
//! noise order flow carries long memory (a semimartingale approximation of
//! fractional Brownian motion) and the noise-trading volatility is stochastic.
//!
//! The crate is organised bottom-up:
//!
//! - [`fbm`]: Brownian drivers, the memory kernel process and the fBm approximation.
//! - [`volatility`]: constant, deterministic-growth and two-state Markov volatility.
//! - [`depth`]: the expected-depth process `G_t` (closed form or ODE table).
//! - [`equilibrium`]: full equilibrium paths, the insider strategy and accounting.
//! - [`stats`]: Monte Carlo reducers and the statistical probes used for checks.
//! - [`config`] and [`experiments`]: the file-driven experiment runner behind the CLI.

pub mod config;
pub mod depth;
pub mod equilibrium;
mod error;
pub mod experiments;
pub mod fbm;
pub mod quad;
pub mod report;
pub mod rng;
pub mod stats;
pub mod volatility;

pub use error::{Error, Result};
