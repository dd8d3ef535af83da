//! The five compartment models and their shared vocabulary.
//!
//! T counts uninfected lymphocytes (1 = healthy equilibrium), U infected
//! lymphocytes, V infectious virions, and W non-infectious virions. Models
//! differ in how infection responds to virus and where cleared virions go.

mod params;
mod rhs;
mod saturation;
mod state;

pub use params::{
    validate_mutation_matrix, DlrParams, MultiStrainParams, NowakMayParams, PerelsonParams,
    SnedecorParams,
};
pub use rhs::{rhs_dlr, rhs_multistrain, rhs_nowak_may, rhs_perelson, rhs_snedecor};
pub use saturation::SaturationFn;
pub use state::{StateLayout, StateVector};

use crate::error::ModelError;
use serde::{Deserialize, Serialize};

/// A model choice bundled with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "kebab-case")]
pub enum Model {
    NowakMay(NowakMayParams),
    Snedecor(SnedecorParams),
    Perelson(PerelsonParams),
    Dlr(DlrParams),
    MultiStrain(MultiStrainParams),
}

impl Model {
    /// Stable identifier used by scenario files and output naming.
    pub fn name(&self) -> &'static str {
        match self {
            Model::NowakMay(_) => "nowak-may",
            Model::Snedecor(_) => "snedecor",
            Model::Perelson(_) => "perelson",
            Model::Dlr(_) => "dlr",
            Model::MultiStrain(_) => "multi-strain",
        }
    }

    pub fn layout(&self) -> StateLayout {
        match self {
            Model::NowakMay(_) | Model::Snedecor(_) => StateLayout::Tuv,
            Model::Perelson(_) | Model::Dlr(_) => StateLayout::Tuvw,
            Model::MultiStrain(p) => StateLayout::PerStrain { n: p.n },
        }
    }

    pub fn dim(&self) -> usize {
        self.layout().dim()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Model::NowakMay(p) => p.validate(),
            Model::Snedecor(p) => p.validate(),
            Model::Perelson(p) => p.validate(),
            Model::Dlr(p) => p.validate(),
            Model::MultiStrain(p) => p.validate(),
        }
    }

    /// Evaluates the vector field at `s`.
    pub fn rhs(&self, s: &StateVector) -> Result<StateVector, ModelError> {
        match self {
            Model::NowakMay(p) => rhs_nowak_may(s, p),
            Model::Snedecor(p) => rhs_snedecor(s, p),
            Model::Perelson(p) => rhs_perelson(s, p),
            Model::Dlr(p) => rhs_dlr(s, p),
            Model::MultiStrain(p) => rhs_multistrain(s, p),
        }
    }

    /// The virus-free equilibrium every model admits.
    pub fn health(&self) -> StateVector {
        match self {
            Model::NowakMay(_) | Model::Snedecor(_) => StateVector::tuv(1.0, 0.0, 0.0),
            Model::Perelson(_) | Model::Dlr(_) => StateVector::tuvw(1.0, 0.0, 0.0, 0.0),
            Model::MultiStrain(p) => {
                let mut vals = vec![0.0; 4 * p.n];
                for (t, (g, b)) in vals.iter_mut().zip(p.gamma_j.iter().zip(&p.beta_j)) {
                    *t = g / b;
                }
                StateVector::per_strain(p.n, vals).expect("health state has layout dimension")
            }
        }
    }
}

/// Totals (T, U, V, W) of a state; W is 0 for three-compartment layouts.
pub fn aggregate(s: &StateVector) -> (f64, f64, f64, f64) {
    let x = s.values();
    match s.layout() {
        StateLayout::Tuv => (x[0], x[1], x[2], 0.0),
        StateLayout::Tuvw => (x[0], x[1], x[2], x[3]),
        StateLayout::PerStrain { n } => {
            let sum = |r: std::ops::Range<usize>| x[r].iter().sum::<f64>();
            (sum(0..n), sum(n..2 * n), sum(2 * n..3 * n), sum(3 * n..4 * n))
        }
    }
}
