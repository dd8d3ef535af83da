//! Numerical toolkit for within-host viral dynamics.
//!
//! Four published compartment models of HIV infection, plus a per-strain
//! generalisation, under one roof:
//!
//! - `nowak-may`: mass-action infection, linear virion clearance
//! - `snedecor`: treatment efficacy and a saturating division boost
//! - `perelson`: infectious/non-infectious virion split
//! - `dlr`: saturation-limited infection with virion absorption
//! - `multi-strain`: n antigenicities coupled by a mutation matrix
//!
//! The crate computes equilibria and their stability, integrates the flows
//! with a positivity-aware adaptive stepper, checks the models' conservation
//! and boundedness properties at runtime, and drives everything from JSON
//! scenario files (see the `virodyn` binary).

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod model;
pub mod output;
pub mod scenario;
pub mod verification;

mod numerics;

pub use error::{AnalysisError, IntegrateError, ModelError};
pub use model::{Model, StateLayout, StateVector};
