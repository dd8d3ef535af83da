//! State vectors with an explicit compartment layout.
//!
//! Every model works on one of three layouts:
//! - `Tuv`: healthy cells T, infected cells U, virus V
//! - `Tuvw`: as above plus non-infectious virus W
//! - `PerStrain { n }`: n strains stored as T_0..T_{n-1}, U_0.., V_0.., W_0..
//!
//! Units are dimensionless where possible: the healthy equilibrium has T = 1
//! for the single-strain models.

use crate::error::ModelError;
use serde::{Deserialize, Serialize};

/// Compartment layout of a state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLayout {
    Tuv,
    Tuvw,
    PerStrain { n: usize },
}

impl StateLayout {
    /// Number of scalar components a state with this layout carries.
    pub fn dim(&self) -> usize {
        match *self {
            StateLayout::Tuv => 3,
            StateLayout::Tuvw => 4,
            StateLayout::PerStrain { n } => 4 * n,
        }
    }

    /// Column headers in storage order, e.g. `T,U,V` or `T_0,T_1,U_0,...`.
    pub fn component_names(&self) -> Vec<String> {
        match *self {
            StateLayout::Tuv => vec!["T".into(), "U".into(), "V".into()],
            StateLayout::Tuvw => {
                vec!["T".into(), "U".into(), "V".into(), "W".into()]
            }
            StateLayout::PerStrain { n } => {
                let mut names = Vec::with_capacity(4 * n);
                for block in ["T", "U", "V", "W"] {
                    for j in 0..n {
                        names.push(format!("{block}_{j}"));
                    }
                }
                names
            }
        }
    }
}

/// A point in a model's phase space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    layout: StateLayout,
    values: Vec<f64>,
}

impl StateVector {
    /// Wraps raw components, checking the length against the layout.
    pub fn new(layout: StateLayout, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != layout.dim() {
            return Err(ModelError::DimensionMismatch {
                layout,
                expected: layout.dim(),
                got: values.len(),
            });
        }
        Ok(Self { layout, values })
    }

    pub fn tuv(t: f64, u: f64, v: f64) -> Self {
        Self {
            layout: StateLayout::Tuv,
            values: vec![t, u, v],
        }
    }

    pub fn tuvw(t: f64, u: f64, v: f64, w: f64) -> Self {
        Self {
            layout: StateLayout::Tuvw,
            values: vec![t, u, v, w],
        }
    }

    /// Per-strain state from blocks in storage order T_j, U_j, V_j, W_j.
    pub fn per_strain(n: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(StateLayout::PerStrain { n }, values)
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Indices of the healthy-cell components (one per strain).
    pub fn t_indices(&self) -> std::ops::Range<usize> {
        match self.layout {
            StateLayout::Tuv | StateLayout::Tuvw => 0..1,
            StateLayout::PerStrain { n } => 0..n,
        }
    }

    /// True if T components are strictly positive and everything else is
    /// at least `-tol`. Biologically meaningful states live here.
    pub fn is_admissible(&self, tol: f64) -> bool {
        let t_range = self.t_indices();
        self.values.iter().enumerate().all(|(i, &x)| {
            if t_range.contains(&i) {
                x > 0.0 && x.is_finite()
            } else {
                x >= -tol && x.is_finite()
            }
        })
    }
}
