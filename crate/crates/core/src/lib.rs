//! Simulation and analysis of how social influence moves collective binary
//! decisions.
//!
//! Two exchange processes are modelled. In *binary exchange* agents share
//! only their yes/no votes and flip probabilistically toward the
//! influence-weighted majority ([`binary`]). In *numeric exchange* agents
//! share numeric estimates, converge by iterated weighted averaging, and
//! vote at the end by comparing their estimate against a threshold
//! ([`degroot`]). Both carry closed-form predictors for whether the
//! initial majority vote will grow, alongside seeded Monte Carlo
//! simulators.
//!
//! [`calibrated`] adds a flip model driven by an empirical revision curve,
//! and [`reanalysis`] tests the numeric-exchange predictor against
//! pre/post estimate trials swept over quantile thresholds.

pub mod binary;
pub mod calibrated;
pub mod degroot;
pub mod error;
pub mod reanalysis;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
