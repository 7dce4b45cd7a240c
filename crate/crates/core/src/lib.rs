//! Pricing and hedging of pure endowments under stochastic mortality with
//! an instantaneous Sharpe-ratio premium.
//!
//! - [`model`]: parameters, validation and closed-form helpers
//! - [`fd`]: finite-difference solver for the price factors
//! - [`mc`]: Monte Carlo estimators of the linear factors
//! - [`hedge`]: q-forward hedge and portfolio simulation
//! - [`cli`]: command-line front end

pub mod cli;
pub mod config;
pub mod error;
pub mod fd;
pub mod hedge;
pub mod mc;
pub mod model;
pub mod report;

pub use error::{Error, Result};
pub use model::{study_defaults, validate, HazardParams, MarketSpec, Model, PopulationPair};
