//! Fixed points and derived scalar quantities for the four single-strain
//! models.
//!
//! Closed forms wherever the algebra permits; otherwise a sign-change scan on
//! a logarithmic grid, bisection to bracket collapse, and a few bounded
//! Newton steps. Every candidate equilibrium is re-evaluated through the
//! model right-hand side and rejected if its max-norm residual reaches 1e-9.

use super::FixedPointReport;
use crate::error::AnalysisError;
use crate::model::{
    DlrParams, Model, NowakMayParams, PerelsonParams, SaturationFn, SnedecorParams, StateVector,
};
use crate::numerics::{bisect, compensated_discriminant, golden_min, newton_polish};
use serde::{Deserialize, Serialize};

/// Residual ceiling for any state reported as an equilibrium.
const RESIDUAL_TOL: f64 = 1e-9;
/// Points in each logarithmic sign-change scan.
const SCAN_POINTS: usize = 8000;

fn checked(model: &Model, state: StateVector) -> Result<FixedPointReport, AnalysisError> {
    let report = FixedPointReport::from_state(model, state)?;
    if report.residual >= RESIDUAL_TOL {
        return Err(AnalysisError::Domain(format!(
            "candidate equilibrium has residual {:.3e}",
            report.residual
        )));
    }
    Ok(report)
}

/// Equilibria of the Nowak-May model: health, plus one seropositive point
/// iff `alpha*xi_nm < a*gamma_nm`. At equality the seropositive formula
/// collapses onto health and is reported once.
pub fn fixed_points_nowak_may(
    p: &NowakMayParams,
) -> Result<Vec<FixedPointReport>, AnalysisError> {
    p.validate()?;
    let model = Model::NowakMay(p.clone());
    let mut out = vec![checked(&model, StateVector::tuv(1.0, 0.0, 0.0))?];
    if p.alpha * p.xi_nm < p.a * p.gamma_nm {
        let t = p.alpha * p.xi_nm / (p.a * p.gamma_nm);
        let v = p.beta * (1.0 - t) / (p.gamma_nm * t);
        let u = p.xi_nm * v / p.a;
        out.push(checked(&model, StateVector::tuv(t, u, v))?);
    }
    Ok(out)
}

/// Equilibria of the reduced Snedecor model: health, plus the admissible
/// root of the quadratic in V when `alpha_s` lies below the seropositivity
/// threshold. A negative discriminant inside that regime means no
/// seropositive point and is not an error.
pub fn fixed_points_snedecor(
    p: &SnedecorParams,
) -> Result<Vec<FixedPointReport>, AnalysisError> {
    p.validate()?;
    let model = Model::Snedecor(p.clone());
    let mut out = vec![checked(&model, StateVector::tuv(1.0, 0.0, 0.0))?];
    let alpha_s4 = 1.0 - p.alpha * (p.beta_s + p.sigma_s) / (p.a * p.beta_s);
    if p.alpha_s < alpha_s4 {
        let (qa, qb, qc) = snedecor_quadratic(p, p.alpha_s);
        let (d, _) = compensated_discriminant(qa, qb, qc);
        if d >= 0.0 {
            // T* < 1 makes qc < 0, so the + branch is the positive root.
            let v = (qb + d.sqrt()) / (2.0 * qa);
            if v > 0.0 {
                let t = snedecor_t_star(p, p.alpha_s);
                let u = (1.0 - p.alpha_s) * p.beta_s * v * t / p.alpha;
                out.push(checked(&model, StateVector::tuv(t, u, v))?);
            }
        }
    }
    Ok(out)
}

/// Infected-cell target level T* for the Snedecor model at a given
/// seroconversion fraction.
fn snedecor_t_star(p: &SnedecorParams, alpha_s: f64) -> f64 {
    (p.sigma_s / p.beta_s) / (p.a * (1.0 - alpha_s) / p.alpha - 1.0)
}

/// Coefficients of the equilibrium quadratic `qa*V^2 - qb*V + qc = 0`.
fn snedecor_quadratic(p: &SnedecorParams, alpha_s: f64) -> (f64, f64, f64) {
    let t = snedecor_t_star(p, alpha_s);
    let qa = (1.0 - alpha_s) * p.beta_s * t;
    let qb = (p.r_s - p.beta) * (t - 1.0) - (1.0 - alpha_s) * p.beta_s * p.gamma_s * t;
    let qc = p.beta * p.gamma_s * (t - 1.0);
    (qa, qb, qc)
}

/// Discriminant of the Snedecor equilibrium quadratic at the model's own
/// seroconversion fraction, as `(value, rounding_bound)` from compensated
/// evaluation. `None` when no positive target level T* exists there.
pub fn snedecor_discriminant(p: &SnedecorParams) -> Option<(f64, f64)> {
    if snedecor_t_star(p, p.alpha_s) <= 0.0 {
        return None;
    }
    let (qa, qb, qc) = snedecor_quadratic(p, p.alpha_s);
    Some(compensated_discriminant(qa, qb, qc))
}

/// Location and value of the discriminant minimum between the two interior
/// thresholds, with a rounding bound on the evaluated value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiscriminantMin {
    pub at_alpha_s: f64,
    pub value: f64,
    /// Bound on the floating-point rounding of `value` given f64
    /// coefficients; the sign of `value` is trustworthy when it exceeds this.
    pub error_bound: f64,
}

/// The four seroconversion thresholds of the Snedecor model.
///
/// `alpha_s3` (target-cell viability) and `alpha_s4` (seropositivity onset)
/// have closed forms. `alpha_s1` and `alpha_s2` bracket the interior window
/// where the equilibrium quadratic loses real roots; they are found by a
/// 20001-point sign scan of the compensated discriminant over
/// `(alpha_s4, alpha_s3)` refined by bisection, and are absent when the scan
/// sees no sign change.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SnedecorThresholds {
    pub alpha_s1: Option<f64>,
    pub alpha_s2: Option<f64>,
    pub alpha_s3: f64,
    pub alpha_s4: f64,
    pub discriminant_min: DiscriminantMin,
}

pub fn thresholds_snedecor(p: &SnedecorParams) -> Result<SnedecorThresholds, AnalysisError> {
    p.validate()?;
    let alpha_s3 = 1.0 - p.alpha / p.a;
    let alpha_s4 = 1.0 - p.alpha * (p.beta_s + p.sigma_s) / (p.a * p.beta_s);
    if alpha_s4 >= alpha_s3 {
        return Err(AnalysisError::Domain(format!(
            "threshold window is empty: alpha_s4 = {alpha_s4}, alpha_s3 = {alpha_s3}"
        )));
    }
    let disc = |alpha_s: f64| {
        let (qa, qb, qc) = snedecor_quadratic(p, alpha_s);
        compensated_discriminant(qa, qb, qc)
    };
    // Stop short of alpha_s3, where T* blows up.
    let lo = alpha_s4;
    let hi = alpha_s3 - 1e-7 * (alpha_s3 - alpha_s4);
    let n = 20001;
    let step = (hi - lo) / (n - 1) as f64;
    let mut alpha_s1 = None;
    let mut alpha_s2 = None;
    let mut grid_min = DiscriminantMin {
        at_alpha_s: lo,
        value: f64::INFINITY,
        error_bound: 0.0,
    };
    let mut prev = disc(lo).0;
    let mut prev_x = lo;
    for i in 1..n {
        let x = lo + step * i as f64;
        let (d, err) = disc(x);
        if d < grid_min.value {
            grid_min = DiscriminantMin {
                at_alpha_s: x,
                value: d,
                error_bound: err,
            };
        }
        if alpha_s1.is_none() && prev > 0.0 && d < 0.0 {
            alpha_s1 = Some(bisect(|y| disc(y).0, prev_x, x));
        }
        if alpha_s1.is_some() && alpha_s2.is_none() && prev < 0.0 && d > 0.0 {
            alpha_s2 = Some(bisect(|y| disc(y).0, prev_x, x));
        }
        prev = d;
        prev_x = x;
    }
    let discriminant_min = match (alpha_s1, alpha_s2) {
        (Some(s1), Some(s2)) => {
            let (at, value) = golden_min(|y| disc(y).0, s1, s2);
            let (_, error_bound) = disc(at);
            DiscriminantMin {
                at_alpha_s: at,
                value,
                error_bound,
            }
        }
        // No negative window: refine around the coarse grid minimum.
        _ => {
            let a = (grid_min.at_alpha_s - step).max(lo);
            let b = (grid_min.at_alpha_s + step).min(hi);
            let (at, value) = golden_min(|y| disc(y).0, a, b);
            let (_, error_bound) = disc(at);
            DiscriminantMin {
                at_alpha_s: at,
                value,
                error_bound,
            }
        }
    };
    Ok(SnedecorThresholds {
        alpha_s1,
        alpha_s2,
        alpha_s3,
        alpha_s4,
        discriminant_min,
    })
}

/// Equilibria of the Perelson model: health, plus one seropositive point iff
/// `alpha*sigma_p < a*theta*delta_p`.
pub fn fixed_points_perelson(
    p: &PerelsonParams,
) -> Result<Vec<FixedPointReport>, AnalysisError> {
    p.validate()?;
    let model = Model::Perelson(p.clone());
    let mut out = vec![checked(&model, StateVector::tuvw(1.0, 0.0, 0.0, 0.0))?];
    if p.alpha * p.sigma_p < p.a * p.theta * p.delta_p {
        let t = p.alpha * p.sigma_p / (p.a * p.theta * p.delta_p);
        let v = p.beta * (1.0 - t) / (p.delta_p * t);
        let u = p.sigma_p * v / (p.a * p.theta);
        let w = p.a * (1.0 - p.theta) * u / p.sigma_p;
        out.push(checked(&model, StateVector::tuvw(t, u, v, w))?);
    }
    Ok(out)
}

/// Scalar quantities that organize the antigenicity-structured model's
/// equilibrium structure.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DlrDerived {
    /// Net viral feedback `a*omega - alpha*zeta`; its sign selects the
    /// equilibrium regime.
    pub eta: f64,
    /// Clearance-to-production ratio `alpha*zeta*tau/(a*theta)`.
    pub rho: f64,
    /// Saturation-free equilibrium virus level `beta*a*theta/eta`;
    /// undefined when `eta` vanishes.
    pub v_bar: Option<f64>,
    /// `|eta|/zeta`, the growth-rate scale of the total-cell bound.
    pub gamma_bound: f64,
    /// Tangency threshold for `rho` in the `eta < 0` regime, above which the
    /// seropositive pair disappears; undefined otherwise.
    pub l_threshold: Option<f64>,
}

pub fn dlr_derived(p: &DlrParams) -> Result<DlrDerived, AnalysisError> {
    p.validate()?;
    let eta = p.a * p.omega - p.alpha * p.zeta;
    let rho = p.alpha * p.zeta * p.tau / (p.a * p.theta);
    let v_bar = if eta != 0.0 {
        Some(p.beta * p.a * p.theta / eta)
    } else {
        None
    };
    let l_threshold = if eta < 0.0 {
        Some(compute_l(p, p.j)?)
    } else {
        None
    };
    Ok(DlrDerived {
        eta,
        rho,
        v_bar,
        gamma_bound: eta.abs() / p.zeta,
        l_threshold,
    })
}

/// Equilibrium relation between virus and the ratio X = V/T when `eta < 0`:
/// V = psi(X). Written in a rationalized form that stays accurate as X -> 0.
fn psi(x: f64, b: f64) -> f64 {
    2.0 * x / (1.0 + (1.0 + 4.0 * x / b).sqrt())
}

fn psi_prime(x: f64, b: f64) -> f64 {
    1.0 / (1.0 + 4.0 * x / b).sqrt()
}

/// Tangency threshold for the `eta < 0` regime: the largest `rho` at which
/// `J(X) = rho*psi(X)` still has a positive solution.
///
/// Uses a 10^4-point uniform scan on `(0, 25*|v_bar|]` as the existence
/// indicator and bisects that indicator over `rho` in `[1, 100]`. Outside
/// its domain (`eta >= 0`) or bracket (threshold above 100) this is an
/// error, not a guess.
pub fn compute_l(p: &DlrParams, j: SaturationFn) -> Result<f64, AnalysisError> {
    p.validate()?;
    let eta = p.a * p.omega - p.alpha * p.zeta;
    if eta >= 0.0 {
        return Err(AnalysisError::Domain(format!(
            "tangency threshold needs eta < 0, got eta = {eta}"
        )));
    }
    let b = (p.beta * p.a * p.theta / eta).abs();
    let n = 10_000;
    let xs: Vec<f64> = (1..=n).map(|i| 25.0 * b * i as f64 / n as f64).collect();
    let indicator = |rho: f64| -> Result<bool, AnalysisError> {
        for &x in &xs {
            if j.eval(x)? - rho * psi(x, b) >= 0.0 {
                return Ok(true);
            }
        }
        Ok(false)
    };
    if !indicator(1.0)? {
        return Err(AnalysisError::Domain(
            "existence indicator already false at rho = 1".into(),
        ));
    }
    if indicator(100.0)? {
        return Err(AnalysisError::Domain(
            "tangency threshold exceeds the search bracket [1, 100]".into(),
        ));
    }
    let (mut lo, mut hi) = (1.0_f64, 100.0_f64);
    while hi - lo > f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if indicator(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Equilibria of the antigenicity-structured model.
///
/// Health always exists. Seropositive points follow the sign of `eta`:
/// for `eta > 0` one point iff `rho < 1`; for `eta = 0` none; for `eta < 0`
/// one point when `rho <= 1`, two when `1 < rho < L`, none when `rho > L`.
/// Roots are found by a sign-change scan on a logarithmic grid, so the
/// tangency case `rho = L` may resolve to two, one, or zero points
/// depending on rounding.
pub fn fixed_points_dlr(p: &DlrParams) -> Result<Vec<FixedPointReport>, AnalysisError> {
    p.validate()?;
    let model = Model::Dlr(p.clone());
    let mut out = vec![checked(&model, StateVector::tuvw(1.0, 0.0, 0.0, 0.0))?];
    let eta = p.a * p.omega - p.alpha * p.zeta;
    let rho = p.alpha * p.zeta * p.tau / (p.a * p.theta);
    let j = p.j;

    let mut sero: Vec<(f64, f64)> = Vec::new(); // (t, v)
    if eta > 0.0 && rho < 1.0 {
        let v_bar = p.beta * p.a * p.theta / eta;
        // Virus level solves J(V*(1 - V/v_bar)) = rho*V on (0, v_bar).
        let g = |v: f64| -> Result<f64, AnalysisError> {
            Ok(j.eval(v * (1.0 - v / v_bar))? - rho * v)
        };
        let dg = |v: f64| -> Result<f64, AnalysisError> {
            let (jp, _) = j.derivative(v * (1.0 - v / v_bar))?;
            Ok(jp * (1.0 - 2.0 * v / v_bar) - rho)
        };
        for v in scan_roots(g, dg, v_bar * 1e-13, v_bar * (1.0 - 1e-12))? {
            let t = 1.0 / (1.0 - v / v_bar);
            sero.push((t, v));
        }
    } else if eta < 0.0 {
        let b = (p.beta * p.a * p.theta / eta).abs();
        // The ratio X = V/T solves J(X) = rho*psi(X); any root obeys
        // psi(X) <= 1/rho, giving the hard upper bound below (reached
        // exactly by the piecewise-linear saturation).
        let x_hi = (1.0 / rho) * (1.0 + 1.0 / (rho * b));
        let h = |x: f64| -> Result<f64, AnalysisError> { Ok(j.eval(x)? - rho * psi(x, b)) };
        let dh = |x: f64| -> Result<f64, AnalysisError> {
            let (jp, _) = j.derivative(x)?;
            Ok(jp - rho * psi_prime(x, b))
        };
        for x in scan_roots(h, dh, x_hi * 1e-13, x_hi * (1.0 + 1e-6))? {
            let t = 2.0 / (1.0 + (1.0 + 4.0 * x / b).sqrt());
            sero.push((t, x * t));
        }
    }
    // eta = 0 or (eta > 0, rho >= 1): health only.

    sero.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (t, v) in sero {
        let u = p.zeta * v * t / (p.a * p.theta);
        let w = v * (1.0 - p.theta) / p.theta;
        out.push(checked(&model, StateVector::tuvw(t, u, v, w))?);
    }
    Ok(out)
}

/// All sign-change roots of `f` on `[lo, hi]`, located on a logarithmic
/// grid, bisected to bracket collapse, Newton-polished, and deduplicated.
fn scan_roots<F, G>(mut f: F, mut df: G, lo: f64, hi: f64) -> Result<Vec<f64>, AnalysisError>
where
    F: FnMut(f64) -> Result<f64, AnalysisError>,
    G: FnMut(f64) -> Result<f64, AnalysisError>,
{
    debug_assert!(lo > 0.0 && hi > lo);
    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut roots = Vec::new();
    let mut prev_x = lo;
    let mut prev_f = f(lo)?;
    for i in 1..SCAN_POINTS {
        let x = if i == SCAN_POINTS - 1 {
            hi
        } else {
            lo * ratio.powi(i as i32)
        };
        let fx = f(x)?;
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if fx != 0.0 && (prev_f < 0.0) != (fx < 0.0) {
            // Bisection wants plain f64 closures; errors inside the bracket
            // cannot occur because both endpoints evaluated cleanly.
            let mut inner = |y: f64| f(y).unwrap_or(f64::NAN);
            let root = bisect(&mut inner, prev_x, x);
            let mut dinner = |y: f64| df(y).unwrap_or(f64::NAN);
            roots.push(newton_polish(&mut inner, &mut dinner, root, prev_x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    if prev_f == 0.0 {
        roots.push(prev_x);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + a.abs()));
    Ok(roots)
}
