//! Saturating response of infection pressure to the per-cell viral load.
//!
//! The antigenicity-structured model caps the infection rate through an odd,
//! bounded function J with J(0) = 0, J'(0) = 1, |J| <= 1. Two shapes are
//! provided: a piecewise-linear clamp and the smooth tanh.

use crate::error::ModelError;
use serde::{Deserialize, Serialize};

/// Choice of saturation shape.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationFn {
    /// Identity clamped to [-1, 1]; kinks at x = +-1.
    Minmod,
    /// Smooth everywhere, approaches the clamp for large |x|.
    #[default]
    Tanh,
}

impl SaturationFn {
    /// J(x). Rejects non-finite inputs so NaNs never propagate silently.
    pub fn eval(self, x: f64) -> Result<f64, ModelError> {
        if !x.is_finite() {
            return Err(ModelError::NonFiniteInput(x));
        }
        Ok(match self {
            SaturationFn::Minmod => {
                if x >= 0.0 {
                    x.min(1.0)
                } else {
                    x.max(-1.0)
                }
            }
            SaturationFn::Tanh => x.tanh(),
        })
    }

    /// J'(x) plus a flag marking evaluation on a kink, where the one-sided
    /// derivative from the linear segment is returned.
    pub fn derivative(self, x: f64) -> Result<(f64, bool), ModelError> {
        if !x.is_finite() {
            return Err(ModelError::NonFiniteInput(x));
        }
        Ok(match self {
            SaturationFn::Minmod => {
                if x.abs() == 1.0 {
                    (1.0, true)
                } else if x.abs() < 1.0 {
                    (1.0, false)
                } else {
                    (0.0, false)
                }
            }
            SaturationFn::Tanh => {
                let th = x.tanh();
                (1.0 - th * th, false)
            }
        })
    }
}
