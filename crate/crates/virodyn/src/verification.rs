//! Runtime witnesses for the models' structural guarantees.
//!
//! Each check walks a computed trajectory and measures how close it comes to
//! violating a property the exact solution provably satisfies: positivity of
//! compartments, the global growth bound on the weighted cell total, the
//! macroscopic balance laws of the multi-strain system, and agreement of the
//! single-strain reduction with the full system. Failures report where and
//! by how much.

use crate::error::{AnalysisError, IntegrateError, ModelError};
use crate::integrator::{integrate, IntegratorConfig, Method, Trajectory};
use crate::model::{DlrParams, Model, MultiStrainParams, StateLayout, StateVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on bound checks: covers integration error only, since the
/// underlying statements are exact for true solutions.
pub const BOUND_TOL: f64 = 1e-8;
/// How far below zero a guarded compartment may sit (clamp tolerance).
pub const NEGATIVE_TOL: f64 = 1e-9;

/// Failures while running a verification check.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Integrate(#[from] IntegrateError),

    #[error(transparent)]
    Analysis(#[from] AnalysisError),

    #[error("trajectory grid is not uniform ({0}); integrate with the fixed-step method or resample")]
    NonUniformGrid(String),

    #[error("trajectory too short for {0}")]
    TooShort(&'static str),
}

/// Outcome of one property check. `worst_margin` is the remaining slack at
/// the tightest point; negative slack means the check failed there.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremReport {
    /// One of "positivity", "global-bound", "macroscopic-laws",
    /// "reduction-equivalence".
    pub theorem: String,
    pub pass: bool,
    /// Minimum slack before the tolerance is violated; `pass` iff >= 0
    /// (positivity additionally requires T strictly positive).
    pub worst_margin: f64,
    /// Time at which the slack is tightest.
    pub worst_time: f64,
    /// Compartment or law name at the tightest point.
    pub worst_component: Option<String>,
    pub details: String,
}

/// Max-norm of the model right-hand side: the direct residual measure for a
/// proposed equilibrium, independent of how the point was obtained.
pub fn fixed_point_residual(model: &Model, state: &StateVector) -> Result<f64, ModelError> {
    let rhs = model.rhs(state)?;
    Ok(rhs.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Checks that every stored state is admissible: target compartments stay
/// strictly positive and all others stay above the clamp tolerance `-1e-9`.
pub fn check_positivity(traj: &Trajectory) -> TheoremReport {
    let t_range = match traj.layout {
        StateLayout::PerStrain { n } => 0..n,
        _ => 0..1,
    };
    let names = traj.layout.component_names();
    let mut min_t = f64::INFINITY;
    let mut worst = TheoremReport {
        theorem: "positivity".into(),
        pass: true,
        worst_margin: f64::INFINITY,
        worst_time: f64::NAN,
        worst_component: None,
        details: String::new(),
    };
    for (k, state) in traj.states.iter().enumerate() {
        for (i, &v) in state.iter().enumerate() {
            let is_t = t_range.contains(&i);
            if is_t {
                min_t = min_t.min(v);
            }
            // Slack: distance to the admissible edge.
            let slack = if is_t { v } else { v + NEGATIVE_TOL };
            if slack < worst.worst_margin {
                worst.worst_margin = slack;
                worst.worst_time = traj.times[k];
                worst.worst_component = Some(names[i].clone());
            }
            if (is_t && v <= 0.0) || (!is_t && v < -NEGATIVE_TOL) {
                worst.pass = false;
            }
        }
    }
    worst.details = format!("minimum T attained: {min_t:.6e}");
    worst
}

/// Checks the global growth bound on the weighted total
/// `S = T + U + (omega/zeta)(V + W)`: linear in time when `eta <= 0`,
/// exponential with rate `|eta/zeta|` when `eta > 0`, each with 1e-8 slack.
pub fn check_global_bound(traj: &Trajectory, p: &DlrParams) -> Result<TheoremReport, VerifyError> {
    p.validate()?;
    if traj.layout != StateLayout::Tuvw {
        return Err(ModelError::LayoutMismatch {
            expected: StateLayout::Tuvw,
            got: traj.layout,
        }
        .into());
    }
    if traj.is_empty() {
        return Err(VerifyError::TooShort("the global bound check"));
    }
    let eta = p.a * p.omega - p.alpha * p.zeta;
    let weighted = |s: &[f64]| s[0] + s[1] + (p.omega / p.zeta) * (s[2] + s[3]);
    let s0 = weighted(&traj.states[0]);
    let t0 = traj.times[0];
    let gamma = (eta / p.zeta).abs();
    let mut report = TheoremReport {
        theorem: "global-bound".into(),
        pass: true,
        worst_margin: f64::INFINITY,
        worst_time: f64::NAN,
        worst_component: Some("T+U+(omega/zeta)(V+W)".into()),
        details: if eta <= 0.0 {
            format!("linear bound S(0)+beta*t, eta = {eta:.6e}")
        } else {
            format!("exponential bound with rate {gamma:.6e}, eta = {eta:.6e}")
        },
    };
    for (k, state) in traj.states.iter().enumerate() {
        let t = traj.times[k] - t0;
        let bound = if eta <= 0.0 {
            s0 + p.beta * t
        } else {
            let growth = (gamma * t).exp();
            s0 * growth + (p.beta / gamma) * (growth - 1.0)
        };
        let slack = bound + BOUND_TOL - weighted(state);
        if slack < report.worst_margin {
            report.worst_margin = slack;
            report.worst_time = traj.times[k];
        }
    }
    report.pass = report.worst_margin >= 0.0;
    Ok(report)
}

/// Largest prefix index such that `times[0..=idx]` is uniformly spaced, plus
/// that spacing.
fn uniform_prefix(times: &[f64]) -> (usize, f64) {
    if times.len() < 2 {
        return (times.len().saturating_sub(1), 0.0);
    }
    let dt = times[1] - times[0];
    let mut end = 1;
    while end + 1 < times.len() {
        let step = times[end + 1] - times[end];
        if (step - dt).abs() > 1e-9 * dt.max(1e-300) {
            break;
        }
        end += 1;
    }
    (end, dt)
}

/// A balance law as (label, macroscopic total, closed-form rate of that total).
type Law<'a> = (&'a str, &'a dyn Fn(&[f64]) -> f64, &'a dyn Fn(&[f64]) -> f64);

/// Checks the multi-strain macroscopic balance laws along a uniform-grid
/// trajectory by comparing central differences of the macroscopic totals
/// against their closed-form rates.
///
/// Law 1: `d(V_tot+W_tot)/dt = a*U_tot - sum_j xi_j (V_j+W_j) T_j`.
/// Law 2: `d/dt [T_tot + U_tot + sum_j (c_j/xi_j)(V_j+W_j)]` equals
/// `sum_j gamma_j - sum_j beta_j T_j - sum_j alpha_j U_j + a*U_tot*r` with
/// `r` the mutation-weighted routing of `c_j/xi_j`.
/// The tolerance is `10*dt^2*scale` with `scale` estimated from third
/// differences, so the residual must shrink at the central-difference rate.
pub fn check_macroscopic_laws(
    traj: &Trajectory,
    p: &MultiStrainParams,
) -> Result<TheoremReport, VerifyError> {
    p.validate()?;
    let n = p.n;
    if traj.layout != (StateLayout::PerStrain { n }) {
        return Err(ModelError::LayoutMismatch {
            expected: StateLayout::PerStrain { n },
            got: traj.layout,
        }
        .into());
    }
    let (prefix_end, dt) = uniform_prefix(&traj.times);
    if prefix_end + 1 < traj.times.len() {
        return Err(VerifyError::NonUniformGrid(format!(
            "spacing changes after t = {:.6}",
            traj.times[prefix_end]
        )));
    }
    if traj.times.len() < 7 {
        return Err(VerifyError::TooShort("central-difference law checks"));
    }

    let virus_total = |s: &[f64]| -> f64 {
        (2 * n..4 * n).map(|i| s[i]).sum()
    };
    let virus_rate = |s: &[f64]| -> f64 {
        let u_tot: f64 = (n..2 * n).map(|i| s[i]).sum();
        let absorbed: f64 = (0..n)
            .map(|j| p.xi_j[j] * (s[2 * n + j] + s[3 * n + j]) * s[j])
            .sum();
        p.a * u_tot - absorbed
    };
    let weighted_total = |s: &[f64]| -> f64 {
        let cells: f64 = (0..2 * n).map(|i| s[i]).sum();
        let virions: f64 = (0..n)
            .map(|j| (p.c_j[j] / p.xi_j[j]) * (s[2 * n + j] + s[3 * n + j]))
            .sum();
        cells + virions
    };
    let weighted_rate = |s: &[f64]| -> f64 {
        let mut rate = 0.0;
        for j in 0..n {
            rate += p.gamma_j[j] - p.beta_j[j] * s[j] - p.alpha_j[j] * s[n + j];
        }
        let v_tot: f64 = (2 * n..3 * n).map(|i| s[i]).sum();
        if v_tot > 0.0 {
            let u_tot: f64 = (n..2 * n).map(|i| s[i]).sum();
            // Production routed into strain j feeds c_j/xi_j per virion.
            let mut routed = 0.0;
            for j in 0..n {
                let mixed: f64 = (0..n).map(|k| p.s[k][j] * s[2 * n + k]).sum();
                routed += (p.c_j[j] / p.xi_j[j]) * mixed / v_tot;
            }
            rate += p.a * u_tot * routed;
        }
        rate
    };

    let laws: [Law<'_>; 2] = [
        ("V_tot+W_tot", &virus_total, &virus_rate),
        ("T_tot+U_tot+sum (c_j/xi_j)(V_j+W_j)", &weighted_total, &weighted_rate),
    ];
    let mut report = TheoremReport {
        theorem: "macroscopic-laws".into(),
        pass: true,
        worst_margin: f64::INFINITY,
        worst_time: f64::NAN,
        worst_component: None,
        details: format!("dt = {dt:.6e}, {} samples", traj.times.len()),
    };
    for (name, total, rate) in laws {
        let q: Vec<f64> = traj.states.iter().map(|s| total(s)).collect();
        let r: Vec<f64> = traj.states.iter().map(|s| rate(s)).collect();
        // Third-difference estimate of max |q'''| / 6 sets the error scale.
        let mut scale = 1.0_f64;
        for i in 2..q.len() - 2 {
            let third = (q[i + 2] - 2.0 * q[i + 1] + 2.0 * q[i - 1] - q[i - 2])
                / (2.0 * dt * dt * dt);
            scale = scale.max(third.abs() / 6.0);
        }
        let tol = 10.0 * dt * dt * scale;
        for i in 1..q.len() - 1 {
            let diff = (q[i + 1] - q[i - 1]) / (2.0 * dt);
            let slack = tol - (diff - r[i]).abs();
            if slack < report.worst_margin {
                report.worst_margin = slack;
                report.worst_time = traj.times[i];
                report.worst_component = Some(name.to_string());
            }
        }
    }
    report.pass = report.worst_margin >= 0.0;
    Ok(report)
}

/// Integrates the single-strain system and its n=1 multi-strain embedding
/// from the same initial state and reports their maximum divergence, which
/// must stay below 1e-8 over 600 days.
pub fn reduction_equivalence(p: &DlrParams) -> Result<TheoremReport, VerifyError> {
    p.validate()?;
    let start = StateVector::tuvw(1.0, 0.0, 0.05, 0.05);
    let cfg = IntegratorConfig {
        method: Method::Rk4Fixed,
        dt: 0.01,
        t_end: 600.0,
        ..IntegratorConfig::default()
    };
    let single = integrate(&Model::Dlr(p.clone()), &start, &cfg)?;
    let embedded = Model::MultiStrain(MultiStrainParams::from_dlr(p));
    let start_ms = StateVector::new(
        StateLayout::PerStrain { n: 1 },
        start.values().to_vec(),
    )?;
    let multi = integrate(&embedded, &start_ms, &cfg)?;

    let names = single.layout.component_names();
    let mut report = TheoremReport {
        theorem: "reduction-equivalence".into(),
        pass: true,
        worst_margin: f64::INFINITY,
        worst_time: f64::NAN,
        worst_component: None,
        details: format!(
            "fixed grid dt = {}, {} samples compared",
            cfg.dt,
            single.times.len()
        ),
    };
    assert_eq!(single.times.len(), multi.times.len());
    for k in 0..single.times.len() {
        for (i, name) in names.iter().enumerate() {
            let slack = BOUND_TOL - (single.states[k][i] - multi.states[k][i]).abs();
            if slack < report.worst_margin {
                report.worst_margin = slack;
                report.worst_time = single.times[k];
                report.worst_component = Some(name.clone());
            }
        }
    }
    report.pass = report.worst_margin >= 0.0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SaturationFn;

    fn run_dlr(p: &DlrParams, start: StateVector, cfg: &IntegratorConfig) -> Trajectory {
        integrate(&Model::Dlr(p.clone()), &start, cfg).unwrap()
    }

    #[test]
    fn positivity_passes_on_default_scenario() {
        let p = DlrParams::default();
        let traj = run_dlr(
            &p,
            StateVector::tuvw(1.0, 0.0, 0.05, 0.05),
            &IntegratorConfig::default(),
        );
        let rep = check_positivity(&traj);
        assert!(rep.pass, "margin {}", rep.worst_margin);
        assert!(rep.details.contains("minimum T"));
    }

    #[test]
    fn positivity_flags_planted_negative() {
        let p = DlrParams::default();
        let mut traj = run_dlr(
            &p,
            StateVector::tuvw(1.0, 0.0, 0.05, 0.05),
            &IntegratorConfig::default(),
        );
        let last = traj.states.len() - 1;
        traj.states[last][2] = -1e-6;
        let rep = check_positivity(&traj);
        assert!(!rep.pass);
        assert!(rep.worst_margin < 0.0);
        assert_eq!(rep.worst_component.as_deref(), Some("V"));
        assert_eq!(rep.worst_time, traj.times[last]);
    }

    #[test]
    fn global_bound_linear_regime() {
        // tau=1, zeta=10: eta = -4.5 <= 0, linear bound.
        let p = DlrParams {
            tau: 1.0,
            zeta: 10.0,
            ..DlrParams::default()
        };
        let traj = run_dlr(
            &p,
            StateVector::tuvw(1.0, 0.0, 0.05, 0.05),
            &IntegratorConfig::default(),
        );
        let rep = check_global_bound(&traj, &p).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);
        assert!(rep.details.contains("linear"));
    }

    #[test]
    fn global_bound_exponential_regime() {
        // tau=10, zeta=1: eta = 1.8 > 0, exponential bound with rate 1.8.
        let p = DlrParams::default();
        let traj = run_dlr(
            &p,
            StateVector::tuvw(1.0, 0.0, 0.05, 0.05),
            &IntegratorConfig {
                t_end: 60.0,
                ..IntegratorConfig::default()
            },
        );
        let rep = check_global_bound(&traj, &p).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);
        assert!(rep.details.contains("rate 1.8"));
    }

    #[test]
    fn global_bound_health_start_stays_level() {
        let p = DlrParams {
            tau: 1.0,
            zeta: 10.0,
            ..DlrParams::default()
        };
        let traj = run_dlr(
            &p,
            StateVector::tuvw(1.0, 0.0, 0.0, 0.0),
            &IntegratorConfig::default(),
        );
        let rep = check_global_bound(&traj, &p).unwrap();
        assert!(rep.pass);
        // S stays exactly 1; the binding moment is t = 0 where the bound is
        // S(0) itself and the slack is the bare tolerance.
        assert!((rep.worst_margin - BOUND_TOL).abs() < 1e-12);
    }

    #[test]
    fn global_bound_rejects_wrong_layout() {
        let p = DlrParams::default();
        let traj = Trajectory {
            model: "nowak-may".into(),
            layout: StateLayout::Tuv,
            times: vec![0.0],
            states: vec![vec![1.0, 0.0, 0.0]],
            clamped_steps: 0,
            retried_steps: 0,
            config: IntegratorConfig::default(),
        };
        assert!(check_global_bound(&traj, &p).is_err());
    }

    fn multistrain_run(n: usize, t_end: f64, dt: f64) -> (Trajectory, MultiStrainParams) {
        let p = MultiStrainParams::uniform_strains(&DlrParams::default(), n);
        let model = Model::MultiStrain(p.clone());
        let dim = model.dim();
        let mut vals = vec![0.0; dim];
        for j in 0..n {
            vals[j] = 1.0 / n as f64;
            vals[2 * n + j] = 0.05 / n as f64;
            vals[3 * n + j] = 0.05 / n as f64;
        }
        let start = StateVector::new(StateLayout::PerStrain { n }, vals).unwrap();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt,
            t_end,
            ..IntegratorConfig::default()
        };
        (integrate(&model, &start, &cfg).unwrap(), p)
    }

    #[test]
    fn macroscopic_laws_hold_on_fine_grid() {
        let (traj, p) = multistrain_run(3, 30.0, 0.01);
        let rep = check_macroscopic_laws(&traj, &p).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);
    }

    /// Worst central-difference residual of the virus-total law, computed
    /// directly from the stored states (independent of the report type).
    fn virus_law_residual(traj: &Trajectory, p: &MultiStrainParams, dt: f64) -> f64 {
        let n = p.n;
        let total = |s: &[f64]| -> f64 { (2 * n..4 * n).map(|i| s[i]).sum() };
        let rate = |s: &[f64]| -> f64 {
            let u_tot: f64 = (n..2 * n).map(|i| s[i]).sum();
            let absorbed: f64 = (0..n)
                .map(|j| p.xi_j[j] * (s[2 * n + j] + s[3 * n + j]) * s[j])
                .sum();
            p.a * u_tot - absorbed
        };
        let mut worst = 0.0_f64;
        for i in 1..traj.states.len() - 1 {
            let diff = (total(&traj.states[i + 1]) - total(&traj.states[i - 1])) / (2.0 * dt);
            worst = worst.max((diff - rate(&traj.states[i])).abs());
        }
        worst
    }

    #[test]
    fn macroscopic_law_residual_shrinks_quadratically() {
        // Log-log slope of the worst law residual over three grids.
        let mut points = Vec::new();
        for &dt in &[0.04, 0.02, 0.01] {
            let (traj, p) = multistrain_run(2, 20.0, dt);
            assert!(check_macroscopic_laws(&traj, &p).unwrap().pass);
            points.push((dt, virus_law_residual(&traj, &p, dt)));
        }
        let slope01 = (points[0].1 / points[1].1).log2();
        let slope12 = (points[1].1 / points[2].1).log2();
        for s in [slope01, slope12] {
            assert!((s - 2.0).abs() < 0.3, "refinement slope {s}");
        }
    }

    #[test]
    fn macroscopic_laws_reject_adaptive_grid() {
        let p = MultiStrainParams::uniform_strains(&DlrParams::default(), 2);
        let model = Model::MultiStrain(p.clone());
        let start = StateVector::new(
            StateLayout::PerStrain { n: 2 },
            vec![0.5, 0.5, 0.0, 0.0, 0.02, 0.02, 0.02, 0.02],
        )
        .unwrap();
        let cfg = IntegratorConfig {
            t_end: 5.0,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&model, &start, &cfg).unwrap();
        let err = check_macroscopic_laws(&traj, &p).unwrap_err();
        assert!(matches!(err, VerifyError::NonUniformGrid(_)));
    }

    #[test]
    fn macroscopic_laws_identically_zero_at_equilibrium() {
        let p = MultiStrainParams::from_dlr(&DlrParams::default());
        let model = Model::MultiStrain(p.clone());
        let start = StateVector::new(StateLayout::PerStrain { n: 1 }, vec![1.0, 0.0, 0.0, 0.0])
            .unwrap();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 0.05,
            t_end: 10.0,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&model, &start, &cfg).unwrap();
        let rep = check_macroscopic_laws(&traj, &p).unwrap();
        assert!(rep.pass);
        // Both totals are constant, so every residual is exactly zero and
        // the margin equals the bare tolerance 10*dt^2.
        let tol = 10.0 * 0.05 * 0.05;
        assert!((rep.worst_margin - tol).abs() < 1e-15);
    }

    #[test]
    fn reduction_matches_across_parameter_pairs() {
        for (tau, zeta) in [(10.0, 1.0), (6.0, 6.0)] {
            let p = DlrParams {
                tau,
                zeta,
                ..DlrParams::default()
            };
            let rep = reduction_equivalence(&p).unwrap();
            assert!(rep.pass, "(tau, zeta) = ({tau}, {zeta})");
            // The healthy-cell row is algebraically but not bitwise the
            // same, so divergence is rounding-level rather than zero.
            assert!(rep.worst_margin > BOUND_TOL - 1e-10);
        }
    }

    #[test]
    fn residual_zero_at_health_and_sensitive_to_perturbation() {
        let model = Model::Dlr(DlrParams::default());
        let health = StateVector::tuvw(1.0, 0.0, 0.0, 0.0);
        assert_eq!(fixed_point_residual(&model, &health).unwrap(), 0.0);

        let fps = crate::analysis::fixed_points_dlr(&DlrParams::default()).unwrap();
        let sero = &fps[1].state;
        assert!(fixed_point_residual(&model, sero).unwrap() < 1e-9);
        let mut bumped = sero.clone();
        bumped.values_mut()[2] += 1e-3;
        assert!(fixed_point_residual(&model, &bumped).unwrap() > 1e-6);
    }

    #[test]
    fn positivity_invariant_axes_stay_put() {
        // Start on the T-axis: solution is pure relaxation to health.
        let p = DlrParams {
            j: SaturationFn::Minmod,
            ..DlrParams::default()
        };
        let traj = run_dlr(
            &p,
            StateVector::tuvw(0.3, 0.0, 0.0, 0.0),
            // Relaxation rate is beta = 0.01/day: give it 20 time constants.
            &IntegratorConfig {
                t_end: 2000.0,
                ..IntegratorConfig::default()
            },
        );
        assert!(check_positivity(&traj).pass);
        let end = traj.final_state();
        assert!((end.values()[0] - 1.0).abs() < 1e-6);
        for i in 1..4 {
            assert_eq!(end.values()[i], 0.0, "component {i} left the axis");
        }

        // Start with only W positive: U and V stay zero, W decays but
        // cannot vanish in finite time.
        let traj = run_dlr(
            &p,
            StateVector::tuvw(1.0, 0.0, 0.0, 0.5),
            &IntegratorConfig::default(),
        );
        assert!(check_positivity(&traj).pass);
        let end = traj.final_state();
        assert_eq!(end.values()[1], 0.0);
        assert_eq!(end.values()[2], 0.0);
        assert!(end.values()[3] > 0.0);
    }
}
