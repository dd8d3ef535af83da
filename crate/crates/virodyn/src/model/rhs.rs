//! Right-hand sides of the five dynamical systems.
//!
//! All rates are per day. Each function checks the state layout, evaluates
//! the vector field, and reports domain problems (non-positive T where a
//! per-cell load is needed, vanishing denominators) as errors instead of
//! returning NaN.

use crate::error::ModelError;
use crate::model::params::{
    DlrParams, MultiStrainParams, NowakMayParams, PerelsonParams, SnedecorParams,
};
use crate::model::state::{StateLayout, StateVector};

fn expect_layout(s: &StateVector, expected: StateLayout) -> Result<(), ModelError> {
    if s.layout() != expected {
        return Err(ModelError::LayoutMismatch { expected, got: s.layout() });
    }
    Ok(())
}

/// Mass-action infection, linear virion clearance.
pub fn rhs_nowak_may(s: &StateVector, p: &NowakMayParams) -> Result<StateVector, ModelError> {
    expect_layout(s, StateLayout::Tuv)?;
    let [t, u, v] = [s.values()[0], s.values()[1], s.values()[2]];
    let infection = p.gamma_nm * v * t;
    Ok(StateVector::tuv(
        p.beta * (1.0 - t) - infection,
        infection - p.alpha * u,
        p.a * u - p.xi_nm * v,
    ))
}

/// Treatment-efficacy model. The division boost `r_s V (T - 1) / (gamma_s + V)`
/// pulls T toward 1 under viral load; efficacy alpha_s scales down infection;
/// virions absorbed during infection leave the free pool.
pub fn rhs_snedecor(s: &StateVector, p: &SnedecorParams) -> Result<StateVector, ModelError> {
    expect_layout(s, StateLayout::Tuv)?;
    let [t, u, v] = [s.values()[0], s.values()[1], s.values()[2]];
    let denom = p.gamma_s + v;
    if denom == 0.0 {
        return Err(ModelError::SingularDenominator(v));
    }
    let boost = p.r_s * v * (t - 1.0) / denom;
    let infection = (1.0 - p.alpha_s) * p.beta_s * v * t;
    Ok(StateVector::tuv(
        p.beta * (1.0 - t) + boost - infection,
        infection - p.alpha * u,
        p.a * u - p.sigma_s * v - p.beta_s * v * t,
    ))
}

/// Infectious/non-infectious virion split with shared clearance.
pub fn rhs_perelson(s: &StateVector, p: &PerelsonParams) -> Result<StateVector, ModelError> {
    expect_layout(s, StateLayout::Tuvw)?;
    let [t, u, v, w] = [s.values()[0], s.values()[1], s.values()[2], s.values()[3]];
    let infection = p.delta_p * v * t;
    Ok(StateVector::tuvw(
        p.beta * (1.0 - t) - infection,
        infection - p.alpha * u,
        p.a * p.theta * u - p.sigma_p * v,
        p.a * (1.0 - p.theta) * u - p.sigma_p * w,
    ))
}

/// Saturation-limited infection driven by the per-cell load V/T, virion
/// absorption by healthy cells, and virus-stimulated division.
pub fn rhs_dlr(s: &StateVector, p: &DlrParams) -> Result<StateVector, ModelError> {
    expect_layout(s, StateLayout::Tuvw)?;
    let [t, u, v, w] = [s.values()[0], s.values()[1], s.values()[2], s.values()[3]];
    if t <= 0.0 {
        return Err(ModelError::NonPositiveT(t));
    }
    let infection = t / p.tau * p.j.eval(v / t)?;
    Ok(StateVector::tuvw(
        p.beta * (1.0 - t) - infection + p.omega * (v + w) * t,
        infection - p.alpha * u,
        p.a * p.theta * u - p.zeta * v * t,
        p.a * (1.0 - p.theta) * u - p.zeta * w * t,
    ))
}

/// Per-strain system coupled through the aggregate load V/T and a mutation
/// matrix. Virion production is distributed over antigenicities in
/// proportion to `sum_k s[k][j] V_k / V`; when total V = 0 that factor is
/// taken as 0, so states with no virus anywhere stay virus-free.
pub fn rhs_multistrain(
    s: &StateVector,
    p: &MultiStrainParams,
) -> Result<StateVector, ModelError> {
    let n = p.n;
    expect_layout(s, StateLayout::PerStrain { n })?;
    let x = s.values();
    let (ts, rest) = x.split_at(n);
    let (us, rest) = rest.split_at(n);
    let (vs, ws) = rest.split_at(n);

    let t_tot: f64 = ts.iter().sum();
    let u_tot: f64 = us.iter().sum();
    let v_tot: f64 = vs.iter().sum();
    if t_tot <= 0.0 {
        return Err(ModelError::NonPositiveT(t_tot));
    }
    let j_load = p.j.eval(v_tot / t_tot)?;
    let prod_v = p.a * p.theta;
    let prod_w = p.a * (1.0 - p.theta);

    // fraction of total production routed to antigenicity j; for a single
    // strain this is V/V = 1 exactly, so the field coincides bitwise with
    // the dimensionless system
    let routing = |sel_j: usize| -> f64 {
        if v_tot == 0.0 {
            return 0.0;
        }
        let mixed: f64 = (0..n).map(|k| p.s[k][sel_j] * vs[k]).sum();
        mixed / v_tot
    };

    let mut out = vec![0.0; 4 * n];
    for j in 0..n {
        let infection = ts[j] / p.tau_j[j] * j_load;
        let route_j = routing(j);
        out[j] = p.gamma_j[j] - p.beta_j[j] * ts[j] + p.c_j[j] * (vs[j] + ws[j]) * ts[j]
            - infection;
        out[n + j] = infection - p.alpha_j[j] * us[j];
        out[2 * n + j] = prod_v * u_tot * route_j - p.xi_j[j] * vs[j] * ts[j];
        out[3 * n + j] = prod_w * u_tot * route_j - p.xi_j[j] * ws[j] * ts[j];
    }
    StateVector::per_strain(n, out)
}
