//! Error taxonomy shared across the crate.
//!
//! Three layers: [`ModelError`] for anything wrong with parameters, states, or
//! right-hand-side evaluation; [`IntegrateError`] for time stepping; and
//! [`AnalysisError`] for equilibrium and eigenvalue computations. Scenario and
//! CLI errors live next to their modules.

use crate::model::StateLayout;
use thiserror::Error;

/// Problems with parameters, states, or evaluating a vector field.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{name}` is invalid: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state has {got} components but layout {layout:?} needs {expected}")]
    DimensionMismatch {
        layout: StateLayout,
        expected: usize,
        got: usize,
    },

    #[error("state layout {got:?} does not match the model's layout {expected:?}")]
    LayoutMismatch {
        expected: StateLayout,
        got: StateLayout,
    },

    #[error("saturation function input is not finite ({0})")]
    NonFiniteInput(f64),

    #[error("T = {0} but the per-cell infection load V/T needs T > 0")]
    NonPositiveT(f64),

    #[error("V = {0} makes the division-boost denominator vanish")]
    SingularDenominator(f64),

    #[error("mutation matrix row {row} sums to {sum}, expected 1 within 1e-12")]
    RowSumOff { row: usize, sum: f64 },

    #[error("mutation matrix entry ({row},{col}) = {value} is negative")]
    NegativeMatrixEntry { row: usize, col: usize, value: f64 },

    #[error("mutation matrix has {rows} rows but row {row} has {cols} columns")]
    NonSquareMatrix { rows: usize, row: usize, cols: usize },
}

/// Failures while advancing an initial value problem.
#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(
        "step size underflow at t = {t} (dt = {dt}, component {component}): \
         the system is too stiff for the requested tolerances"
    )]
    StepUnderflow { t: f64, dt: f64, component: usize },

    #[error("initial state is not admissible: {0}")]
    InadmissibleStart(String),

    #[error("integrator config invalid: {0}")]
    BadConfig(String),
}

/// Failures in equilibrium, threshold, or spectral computations.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("root refinement did not converge in [{lo}, {hi}] (residual {residual})")]
    RootNotConverged { lo: f64, hi: f64, residual: f64 },

    #[error("eigenvector refinement stalled; partial spectrum: {partial:?}")]
    EigenNotConverged { partial: Vec<(f64, f64)> },

    #[error("{0}")]
    Domain(String),
}
