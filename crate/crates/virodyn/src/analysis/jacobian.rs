//! Jacobians of the model right-hand sides.
//!
//! The four single-strain models get hand-derived analytic matrices; the
//! multi-strain system falls back to central finite differences (the
//! mutation routing term makes the analytic form long without adding
//! accuracy where it matters). A finite-difference path is always available
//! for cross-checking the analytic entries.

use crate::error::{AnalysisError, ModelError};
use crate::model::{
    DlrParams, Model, NowakMayParams, PerelsonParams, SnedecorParams, StateVector,
};
use nalgebra::DMatrix;

/// Jacobian matrix plus provenance flags.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianReport {
    pub matrix: DMatrix<f64>,
    /// True when the saturation derivative was evaluated at its kink, so the
    /// matrix uses a one-sided derivative.
    pub one_sided: bool,
    /// True when the matrix came from finite differences rather than an
    /// analytic formula.
    pub finite_difference: bool,
}

/// Jacobian of the model right-hand side at a state.
pub fn jacobian(model: &Model, s: &StateVector) -> Result<JacobianReport, AnalysisError> {
    if model.layout() != s.layout() {
        return Err(ModelError::LayoutMismatch {
            expected: model.layout(),
            got: s.layout(),
        }
        .into());
    }
    match model {
        Model::NowakMay(p) => Ok(analytic(jac_nowak_may(s, p))),
        Model::Snedecor(p) => Ok(analytic(jac_snedecor(s, p)?)),
        Model::Perelson(p) => Ok(analytic(jac_perelson(s, p))),
        Model::Dlr(p) => jac_dlr(s, p),
        Model::MultiStrain(_) => Ok(JacobianReport {
            matrix: fd_jacobian(model, s, 1e-6)?,
            one_sided: false,
            finite_difference: true,
        }),
    }
}

fn analytic(matrix: DMatrix<f64>) -> JacobianReport {
    JacobianReport {
        matrix,
        one_sided: false,
        finite_difference: false,
    }
}

fn jac_nowak_may(s: &StateVector, p: &NowakMayParams) -> DMatrix<f64> {
    let (t, _, v) = (s.values()[0], s.values()[1], s.values()[2]);
    DMatrix::from_row_slice(
        3,
        3,
        &[
            -p.beta - p.gamma_nm * v,
            0.0,
            -p.gamma_nm * t,
            p.gamma_nm * v,
            -p.alpha,
            p.gamma_nm * t,
            0.0,
            p.a,
            -p.xi_nm,
        ],
    )
}

fn jac_snedecor(s: &StateVector, p: &SnedecorParams) -> Result<DMatrix<f64>, ModelError> {
    let (t, _, v) = (s.values()[0], s.values()[1], s.values()[2]);
    let denom = p.gamma_s + v;
    if denom == 0.0 {
        return Err(ModelError::SingularDenominator(denom));
    }
    let infect = (1.0 - p.alpha_s) * p.beta_s;
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            -p.beta + p.r_s * v / denom - infect * v,
            0.0,
            p.r_s * (t - 1.0) * p.gamma_s / (denom * denom) - infect * t,
            infect * v,
            -p.alpha,
            infect * t,
            -p.beta_s * v,
            p.a,
            -p.sigma_s - p.beta_s * t,
        ],
    ))
}

fn jac_perelson(s: &StateVector, p: &PerelsonParams) -> DMatrix<f64> {
    let (t, _, v) = (s.values()[0], s.values()[1], s.values()[2]);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            -p.beta - p.delta_p * v,
            0.0,
            -p.delta_p * t,
            0.0,
            p.delta_p * v,
            -p.alpha,
            p.delta_p * t,
            0.0,
            0.0,
            p.a * p.theta,
            -p.sigma_p,
            0.0,
            0.0,
            p.a * (1.0 - p.theta),
            0.0,
            -p.sigma_p,
        ],
    )
}

fn jac_dlr(s: &StateVector, p: &DlrParams) -> Result<JacobianReport, AnalysisError> {
    let vals = s.values();
    let (t, _, v, w) = (vals[0], vals[1], vals[2], vals[3]);
    if t <= 0.0 {
        return Err(ModelError::NonPositiveT(t).into());
    }
    let x = v / t;
    let j = p.j.eval(x)?;
    let (jp, one_sided) = p.j.derivative(x)?;
    let matrix = DMatrix::from_row_slice(
        4,
        4,
        &[
            -p.beta - j / p.tau + v * jp / (t * p.tau) + p.omega * (v + w),
            0.0,
            -jp / p.tau + p.omega * t,
            p.omega * t,
            j / p.tau - v * jp / (t * p.tau),
            -p.alpha,
            jp / p.tau,
            0.0,
            -p.zeta * v,
            p.a * p.theta,
            -p.zeta * t,
            0.0,
            -p.zeta * w,
            p.a * (1.0 - p.theta),
            0.0,
            -p.zeta * t,
        ],
    );
    Ok(JacobianReport {
        matrix,
        one_sided,
        finite_difference: false,
    })
}

/// Central finite-difference Jacobian with per-component step
/// `rel_step * max(1, |x_i|)`.
pub fn fd_jacobian(
    model: &Model,
    s: &StateVector,
    rel_step: f64,
) -> Result<DMatrix<f64>, AnalysisError> {
    let n = s.values().len();
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        let h = rel_step * s.values()[i].abs().max(1.0);
        let mut plus = s.clone();
        plus.values_mut()[i] += h;
        let mut minus = s.clone();
        minus.values_mut()[i] -= h;
        let fp = model.rhs(&plus)?;
        let fm = model.rhs(&minus)?;
        // Use the realized step: x+h and x-h round.
        let span = plus.values()[i] - minus.values()[i];
        for r in 0..n {
            matrix[(r, i)] = (fp.values()[r] - fm.values()[r]) / span;
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MultiStrainParams, SaturationFn, StateLayout};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm_inf(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    fn assert_matches_fd(model: &Model, s: &StateVector, tol: f64) {
        let jac = jacobian(model, s).unwrap();
        let fd = fd_jacobian(model, s, 1e-6).unwrap();
        let scale = norm_inf(&jac.matrix).max(1.0);
        let diff = norm_inf(&(&jac.matrix - &fd));
        assert!(
            diff / scale < tol,
            "analytic vs finite difference: {:.3e} at {:?}",
            diff / scale,
            s.values()
        );
    }

    fn random_state(rng: &mut ChaCha8Rng, layout: StateLayout) -> StateVector {
        let n = layout.dim();
        let t_idx = {
            let probe = StateVector::new(layout, vec![1.0; n]).unwrap();
            probe.t_indices()
        };
        let mut vals = vec![0.0; n];
        for (i, v) in vals.iter_mut().enumerate() {
            // Log-uniform over a few decades, kept away from compartment
            // boundaries so central differences stay in the smooth interior.
            let lo: f64 = if t_idx.contains(&i) { 0.05 } else { 1e-2 };
            let hi: f64 = if t_idx.contains(&i) { 2.0 } else { 10.0 };
            let u: f64 = rng.random();
            *v = lo * (hi / lo).powf(u);
        }
        StateVector::new(layout, vals).unwrap()
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let models = [
            Model::NowakMay(NowakMayParams::default()),
            Model::Snedecor(SnedecorParams::default()),
            Model::Perelson(PerelsonParams::default()),
            Model::Dlr(DlrParams::default()),
        ];
        for model in &models {
            for _ in 0..100 {
                let s = random_state(&mut rng, model.layout());
                assert_matches_fd(model, &s, 1e-6);
            }
        }
    }

    #[test]
    fn multistrain_jacobian_is_finite_difference() {
        let p = MultiStrainParams::uniform_strains(&DlrParams::default(), 3);
        let model = Model::MultiStrain(p);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state(&mut rng, model.layout());
        let jac = jacobian(&model, &s).unwrap();
        assert!(jac.finite_difference);
        assert_eq!(jac.matrix.nrows(), 12);
        // Sanity: d(dU_j)/dU_j includes -alpha_j on the diagonal block.
        let a = jac.matrix[(3, 3)];
        assert!(a < 0.0);
    }

    #[test]
    fn piecewise_linear_kink_sets_one_sided_flag() {
        let p = DlrParams {
            j: SaturationFn::Minmod,
            ..DlrParams::default()
        };
        let model = Model::Dlr(p);
        let s = StateVector::tuvw(0.5, 0.1, 0.5, 0.1); // V/T = 1 exactly
        let jac = jacobian(&model, &s).unwrap();
        assert!(jac.one_sided);
        let s2 = StateVector::tuvw(0.5, 0.1, 0.4, 0.1);
        assert!(!jacobian(&model, &s2).unwrap().one_sided);
    }

    #[test]
    fn nowak_may_health_jacobian_entries() {
        let p = NowakMayParams::default();
        let jac = jacobian(
            &Model::NowakMay(p.clone()),
            &StateVector::tuv(1.0, 0.0, 0.0),
        )
        .unwrap();
        let expected = [
            [-p.beta, 0.0, -p.gamma_nm],
            [0.0, -p.alpha, p.gamma_nm],
            [0.0, p.a, -p.xi_nm],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (c, want) in row.iter().enumerate() {
                assert_eq!(jac.matrix[(r, c)], *want);
            }
        }
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let model = Model::NowakMay(NowakMayParams::default());
        let s = StateVector::tuvw(1.0, 0.0, 0.0, 0.0);
        assert!(jacobian(&model, &s).is_err());
    }
}
