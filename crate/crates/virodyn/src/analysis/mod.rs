//! Equilibrium computation, linearization, and stability classification.
//!
//! Fixed points come from closed forms where the model admits them and from
//! bracketed scalar root finding otherwise. Every returned equilibrium is
//! re-checked against the model right-hand side; a residual above 1e-9 is a
//! hard error, never a silently degraded answer.

mod equilibria;
mod jacobian;
mod spectral;

pub use equilibria::{
    compute_l, dlr_derived, fixed_points_dlr, fixed_points_nowak_may, fixed_points_perelson,
    fixed_points_snedecor, snedecor_discriminant, thresholds_snedecor, DiscriminantMin,
    DlrDerived, SnedecorThresholds,
};
pub use jacobian::{fd_jacobian, jacobian, JacobianReport};
pub use spectral::{
    companion_cubic, eigen_pairs, eigenvalues, routh_hurwitz_cubic, EigenPair, RouthHurwitzReport,
};

use crate::error::AnalysisError;
use crate::model::{Model, StateVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex scalar in a serialization-friendly shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

impl From<ComplexValue> for Complex64 {
    fn from(z: ComplexValue) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Whether an equilibrium carries virus.
///
/// `Health` requires every infected and viral compartment to sit below 1e-12;
/// anything else is `Seropositive`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    Health,
    Seropositive,
}

/// Linear stability verdict.
///
/// `Marginal` wins whenever any eigenvalue real part sits within 1e-9 of
/// zero, so a hyperbolicity failure is never masked by a nearby sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// One equilibrium together with everything the caller needs to judge it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// Equilibrium state, same layout as the model.
    pub state: StateVector,
    /// Health or seropositive, decided by the 1e-12 compartment rule.
    pub kind: FixedPointKind,
    /// Max-norm of the model right-hand side at `state`.
    pub residual: f64,
    /// Jacobian spectrum, filled in by [`classify_stability`].
    pub eigenvalues: Vec<ComplexValue>,
    /// Stability verdict, filled in by [`classify_stability`].
    pub stability: Option<Stability>,
    /// For boundary equilibria: real unstable eigendirections along which a
    /// small perturbation keeps every nonnegative compartment nonnegative.
    pub admissible_unstable_dirs: Vec<Vec<f64>>,
    /// True when eigenvector computation did not converge, so the
    /// admissibility count above is absent rather than zero.
    pub admissibility_skipped: bool,
}

impl FixedPointReport {
    /// Builds an unclassified report from a state, deciding `kind` from the
    /// compartment rule and `residual` from the model right-hand side.
    pub(crate) fn from_state(model: &Model, state: StateVector) -> Result<Self, AnalysisError> {
        let rhs = model.rhs(&state)?;
        let residual = rhs.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let kind = kind_of(&state);
        Ok(FixedPointReport {
            state,
            kind,
            residual,
            eigenvalues: Vec::new(),
            stability: None,
            admissible_unstable_dirs: Vec::new(),
            admissibility_skipped: false,
        })
    }
}

/// Applies the compartment rule: health iff every non-target compartment is
/// below 1e-12 in absolute value.
pub fn kind_of(state: &StateVector) -> FixedPointKind {
    let t_idx = state.t_indices();
    let infected = state
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !t_idx.contains(i))
        .all(|(_, v)| v.abs() < 1e-12);
    if infected {
        FixedPointKind::Health
    } else {
        FixedPointKind::Seropositive
    }
}

/// Tolerance below which an eigenvalue real part counts as zero.
pub const MARGINAL_BAND: f64 = 1e-9;
/// Tolerance below which a state component counts as sitting on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Fills in the spectrum, stability verdict, and (for boundary equilibria)
/// the admissible unstable directions of a fixed-point report.
///
/// Requires `fp.residual < 1e-9`: classifying a point that does not solve the
/// model is a caller error. Admissibility of a real unstable direction `u`
/// means `fp + eps*u` or `fp - eps*u` stays componentwise nonnegative (to
/// first order) on every boundary component.
pub fn classify_stability(
    model: &Model,
    mut fp: FixedPointReport,
) -> Result<FixedPointReport, AnalysisError> {
    if !fp.residual.is_finite() || fp.residual >= 1e-9 {
        return Err(AnalysisError::Domain(format!(
            "refusing to classify a point with residual {:.3e} (needs < 1e-9)",
            fp.residual
        )));
    }
    let jac = jacobian(model, &fp.state)?;
    let pairs = eigen_pairs(&jac.matrix)?;
    fp.eigenvalues = pairs.iter().map(|p| ComplexValue::from(p.value)).collect();

    let any_marginal = pairs.iter().any(|p| p.value.re.abs() < MARGINAL_BAND);
    let any_positive = pairs.iter().any(|p| p.value.re > 0.0);
    fp.stability = Some(if any_marginal {
        Stability::Marginal
    } else if any_positive {
        Stability::Unstable
    } else {
        Stability::Stable
    });

    let boundary: Vec<usize> = fp
        .state
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() < BOUNDARY_TOL)
        .map(|(i, _)| i)
        .collect();
    fp.admissible_unstable_dirs.clear();
    fp.admissibility_skipped = false;
    if boundary.is_empty() {
        return Ok(fp);
    }

    for pair in &pairs {
        // Only real, strictly unstable eigenvalues can carry a real
        // perturbation direction out of (or along) the boundary.
        if pair.value.re <= MARGINAL_BAND || pair.value.im.abs() > MARGINAL_BAND * (1.0 + pair.value.norm()) {
            continue;
        }
        if !pair.converged {
            // Spectrum is fine but this direction is unavailable.
            fp.admissibility_skipped = true;
            continue;
        }
        let Some(u) = realize(&pair.vector) else {
            fp.admissibility_skipped = true;
            continue;
        };
        let plus_ok = boundary.iter().all(|&i| u[i] >= -BOUNDARY_TOL);
        let minus_ok = boundary.iter().all(|&i| -u[i] >= -BOUNDARY_TOL);
        if plus_ok {
            fp.admissible_unstable_dirs.push(u);
        } else if minus_ok {
            fp.admissible_unstable_dirs.push(u.iter().map(|v| -v).collect());
        }
    }
    Ok(fp)
}

/// Rotates a complex eigenvector onto the real axis; None when it has a
/// genuinely complex residue.
fn realize(v: &[Complex64]) -> Option<Vec<f64>> {
    let (k, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
    let phase = v[k] / v[k].norm();
    let rotated: Vec<Complex64> = v.iter().map(|z| z / phase).collect();
    let norm: f64 = rotated.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let imag: f64 = rotated.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if imag > 1e-8 * norm {
        return None;
    }
    Some(rotated.iter().map(|z| z.re).collect())
}
