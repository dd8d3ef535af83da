//! Parameter records for the five vector fields, with validating accessors
//! and defaults matching the published baseline: one immune-system renewal
//! per 100 days (beta = 0.01), infected-cell death in 1/0.7 days
//! (alpha = 0.7), and a burst size of 250 virions per cell per day (a = 250).
//!
//! Every struct derives serde with `deny_unknown_fields`, so a typo in a
//! scenario file is rejected instead of silently ignored.

use crate::error::ModelError;
use crate::model::saturation::SaturationFn;
use serde::{Deserialize, Serialize};

fn require(cond: bool, name: &'static str, reason: String) -> Result<(), ModelError> {
    if cond {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, reason })
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
    require(v.is_finite() && v > 0.0, name, format!("must be finite and > 0, got {v}"))
}

fn nonnegative(name: &'static str, v: f64) -> Result<(), ModelError> {
    require(v.is_finite() && v >= 0.0, name, format!("must be finite and >= 0, got {v}"))
}

fn fraction(name: &'static str, v: f64) -> Result<(), ModelError> {
    require(
        v.is_finite() && (0.0..=1.0).contains(&v),
        name,
        format!("must lie in [0, 1], got {v}"),
    )
}

/// Three-compartment model with mass-action infection and plain viral decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NowakMayParams {
    /// Healthy-cell renewal and death rate (1/day).
    pub beta: f64,
    /// Infection rate per unit virus (1/day).
    pub gamma_nm: f64,
    /// Infected-cell death rate (1/day).
    pub alpha: f64,
    /// Virion production per infected cell (1/day).
    pub a: f64,
    /// Virion clearance rate (1/day).
    pub xi_nm: f64,
}

impl Default for NowakMayParams {
    fn default() -> Self {
        Self { beta: 0.01, gamma_nm: 0.0125, alpha: 0.7, a: 250.0, xi_nm: 10.0 }
    }
}

impl NowakMayParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("beta", self.beta)?;
        positive("gamma_nm", self.gamma_nm)?;
        positive("alpha", self.alpha)?;
        positive("a", self.a)?;
        positive("xi_nm", self.xi_nm)
    }
}

/// Treatment-efficacy model: infection damped by efficacy alpha_s, healthy
/// cells boosted by a saturating division term, virions lost to absorption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnedecorParams {
    /// Healthy-cell renewal and death rate (1/day).
    pub beta: f64,
    /// Division boost amplitude (1/day).
    pub r_s: f64,
    /// Half-saturation constant of the division boost.
    pub gamma_s: f64,
    /// Treatment efficacy in [0, 1]; 0 means untreated.
    pub alpha_s: f64,
    /// Infection rate per unit virus (1/day).
    pub beta_s: f64,
    /// Infected-cell death rate (1/day).
    pub alpha: f64,
    /// Virion production per infected cell (1/day).
    pub a: f64,
    /// Virion clearance rate (1/day).
    pub sigma_s: f64,
}

impl Default for SnedecorParams {
    fn default() -> Self {
        Self {
            beta: 0.01,
            r_s: 0.004,
            gamma_s: 4.0e-5,
            alpha_s: 0.6,
            beta_s: 0.0125,
            alpha: 0.7,
            a: 250.0,
            sigma_s: 2.0,
        }
    }
}

impl SnedecorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("beta", self.beta)?;
        nonnegative("r_s", self.r_s)?;
        positive("gamma_s", self.gamma_s)?;
        fraction("alpha_s", self.alpha_s)?;
        positive("beta_s", self.beta_s)?;
        positive("alpha", self.alpha)?;
        positive("a", self.a)?;
        positive("sigma_s", self.sigma_s)
    }
}

/// Four-compartment model splitting virions into infectious and
/// non-infectious pools with a shared clearance rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerelsonParams {
    /// Healthy-cell renewal and death rate (1/day).
    pub beta: f64,
    /// Infection rate per unit infectious virus (1/day).
    pub delta_p: f64,
    /// Infected-cell death rate (1/day).
    pub alpha: f64,
    /// Virion production per infected cell (1/day).
    pub a: f64,
    /// Fraction of produced virions that are infectious.
    pub theta: f64,
    /// Virion clearance rate, shared by both pools (1/day).
    pub sigma_p: f64,
}

impl Default for PerelsonParams {
    fn default() -> Self {
        Self { beta: 0.01, delta_p: 0.0125, alpha: 0.7, a: 250.0, theta: 0.1, sigma_p: 2.0 }
    }
}

impl PerelsonParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("beta", self.beta)?;
        positive("delta_p", self.delta_p)?;
        positive("alpha", self.alpha)?;
        positive("a", self.a)?;
        require(
            self.theta.is_finite() && self.theta > 0.0 && self.theta <= 1.0,
            "theta",
            format!("must lie in (0, 1], got {}", self.theta),
        )?;
        positive("sigma_p", self.sigma_p)
    }
}

/// Saturation-limited model: infection responds to the per-cell load V/T
/// through a bounded function J, virions are absorbed by the cells they
/// infect, and viral presence stimulates healthy-cell division.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlrParams {
    /// Healthy-cell renewal and death rate (1/day).
    pub beta: f64,
    /// Infection time scale (days); smaller means faster infection.
    pub tau: f64,
    /// Infected-cell death rate (1/day).
    pub alpha: f64,
    /// Virion production per infected cell (1/day).
    pub a: f64,
    /// Fraction of produced virions that are infectious.
    pub theta: f64,
    /// Virion absorption rate per healthy cell (1/day).
    pub zeta: f64,
    /// Division stimulation per unit total virus (1/day).
    pub omega: f64,
    /// Saturation shape for the infection response.
    pub j: SaturationFn,
}

impl Default for DlrParams {
    fn default() -> Self {
        Self {
            beta: 0.01,
            tau: 10.0,
            alpha: 0.7,
            a: 250.0,
            theta: 0.1,
            zeta: 1.0,
            omega: 0.01,
            j: SaturationFn::Tanh,
        }
    }
}

impl DlrParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("beta", self.beta)?;
        positive("tau", self.tau)?;
        positive("alpha", self.alpha)?;
        positive("a", self.a)?;
        require(
            self.theta.is_finite() && self.theta > 0.0 && self.theta <= 1.0,
            "theta",
            format!("must lie in (0, 1], got {}", self.theta),
        )?;
        positive("zeta", self.zeta)?;
        nonnegative("omega", self.omega)
    }
}

/// Checks that a mutation matrix is square, entrywise nonnegative, and
/// row-stochastic within 1e-12. Entry `s[k][j]` is the probability that an
/// offspring of strain k carries antigenicity j.
pub fn validate_mutation_matrix(s: &[Vec<f64>]) -> Result<(), ModelError> {
    let n = s.len();
    for (k, row) in s.iter().enumerate() {
        if row.len() != n {
            return Err(ModelError::NonSquareMatrix { rows: n, row: k, cols: row.len() });
        }
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            // NaN entries must fail here too, not slip through to the row sum.
            if v.is_nan() || v < 0.0 {
                return Err(ModelError::NegativeMatrixEntry { row: k, col: j, value: v });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ModelError::RowSumOff { row: k, sum });
        }
    }
    Ok(())
}

/// Per-strain generalisation of [`DlrParams`]: n antigenicities with their
/// own rate constants, coupled through the shared load V/T and a mutation
/// matrix. This is the dimensional form; dividing by the healthy equilibrium
/// `gamma_j / beta_j = 1` recovers the single-strain system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiStrainParams {
    /// Number of strains.
    pub n: usize,
    /// Healthy-cell death rates (1/day), one per strain.
    pub beta_j: Vec<f64>,
    /// Healthy-cell renewal fluxes (cells/day), one per strain.
    pub gamma_j: Vec<f64>,
    /// Division stimulation coefficients, one per strain.
    pub c_j: Vec<f64>,
    /// Infection time scales (days), one per strain.
    pub tau_j: Vec<f64>,
    /// Infected-cell death rates (1/day), one per strain.
    pub alpha_j: Vec<f64>,
    /// Virion absorption rates, one per strain.
    pub xi_j: Vec<f64>,
    /// Virion production per infected cell (1/day), shared.
    pub a: f64,
    /// Infectious fraction of produced virions, shared.
    pub theta: f64,
    /// Row-stochastic mutation matrix, `s[k][j]` = P(k mutates to j).
    pub s: Vec<Vec<f64>>,
    /// Saturation shape for the infection response.
    pub j: SaturationFn,
}

impl Default for MultiStrainParams {
    fn default() -> Self {
        Self::from_dlr(&DlrParams::default())
    }
}

impl MultiStrainParams {
    /// Single-strain embedding of the dimensionless model; with these values
    /// the n = 1 vector field coincides with [`DlrParams`]' one.
    pub fn from_dlr(p: &DlrParams) -> Self {
        Self {
            n: 1,
            beta_j: vec![p.beta],
            gamma_j: vec![p.beta],
            c_j: vec![p.omega],
            tau_j: vec![p.tau],
            alpha_j: vec![p.alpha],
            xi_j: vec![p.zeta],
            a: p.a,
            theta: p.theta,
            s: vec![vec![1.0]],
            j: p.j,
        }
    }

    /// n identical strains with uniform mutation between them.
    pub fn uniform_strains(p: &DlrParams, n: usize) -> Self {
        let single = Self::from_dlr(p);
        Self {
            n,
            beta_j: vec![single.beta_j[0]; n],
            gamma_j: vec![single.gamma_j[0]; n],
            c_j: vec![single.c_j[0]; n],
            tau_j: vec![single.tau_j[0]; n],
            alpha_j: vec![single.alpha_j[0]; n],
            xi_j: vec![single.xi_j[0]; n],
            a: p.a,
            theta: p.theta,
            s: vec![vec![1.0 / n as f64; n]; n],
            j: p.j,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.n >= 1, "n", "must be at least 1".into())?;
        let check_len = |name: &'static str, len: usize| {
            require(len == self.n, name, format!("needs {} entries, got {len}", self.n))
        };
        check_len("beta_j", self.beta_j.len())?;
        check_len("gamma_j", self.gamma_j.len())?;
        check_len("c_j", self.c_j.len())?;
        check_len("tau_j", self.tau_j.len())?;
        check_len("alpha_j", self.alpha_j.len())?;
        check_len("xi_j", self.xi_j.len())?;
        for j in 0..self.n {
            positive("beta_j", self.beta_j[j])?;
            positive("gamma_j", self.gamma_j[j])?;
            nonnegative("c_j", self.c_j[j])?;
            positive("tau_j", self.tau_j[j])?;
            positive("alpha_j", self.alpha_j[j])?;
            positive("xi_j", self.xi_j[j])?;
        }
        positive("a", self.a)?;
        require(
            self.theta.is_finite() && self.theta > 0.0 && self.theta <= 1.0,
            "theta",
            format!("must lie in (0, 1], got {}", self.theta),
        )?;
        if self.s.len() != self.n {
            return Err(ModelError::NonSquareMatrix {
                rows: self.n,
                row: 0,
                cols: self.s.len(),
            });
        }
        validate_mutation_matrix(&self.s)
    }
}
