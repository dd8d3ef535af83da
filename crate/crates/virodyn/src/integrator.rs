//! Time integration with positivity-aware step control.
//!
//! Two steppers: classic fixed-step RK4 and an adaptive Dormand-Prince 5(4)
//! pair with the first-same-as-last optimisation. The guard keeps emitted
//! states biologically admissible: a step driving any component below
//! `-abs_tol` is retried smaller, and residual negatives inside
//! `[-abs_tol, 0)` are clamped to zero.
//!
//! Landmark detection and an empirical-order probe live here too since both
//! consume trajectories directly.

use crate::error::{IntegrateError, ModelError};
use crate::model::{Model, StateLayout, StateVector};
use serde::{Deserialize, Serialize};

/// Smallest step the adaptive loop will attempt before declaring the
/// problem too stiff for the tolerances (days).
const MIN_DT: f64 = 1e-12;

/// Stepping scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
    #[default]
    Rk45Adaptive,
}

/// Integration settings. `dt` is the grid step for [`Method::Rk4Fixed`] and
/// the initial trial step for [`Method::Rk45Adaptive`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    pub positivity_guard: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            dt: 0.1,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            t_end: 600.0,
            positivity_guard: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |msg: String| Err(IntegrateError::BadConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be finite and > 0, got {}", self.dt));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return bad(format!("rel_tol must be finite and > 0, got {}", self.rel_tol));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            return bad(format!("abs_tol must be finite and > 0, got {}", self.abs_tol));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be finite and > 0, got {}", self.t_end));
        }
        Ok(())
    }
}

/// A computed orbit: times, states, and guard bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: String,
    pub layout: StateLayout,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Accepted steps where a tiny negative component was clamped to zero.
    pub clamped_steps: usize,
    /// Adaptive: rejected trial steps. Fixed: internal subdivisions.
    pub retried_steps: usize,
    pub config: IntegratorConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> StateVector {
        StateVector::new(self.layout, self.states[i].clone())
            .expect("stored states match the trajectory layout")
    }

    pub fn final_state(&self) -> StateVector {
        self.state(self.states.len() - 1)
    }

    /// Values of one component across time.
    pub fn component(&self, idx: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(move |s| s[idx])
    }
}

/// Dormand-Prince 5(4) tableau. The vector fields are autonomous, so the
/// stage times are never needed.
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (row 7 of A doubles as b; FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// b - b_hat, the embedded error weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rhs_raw(model: &Model, y: &[f64]) -> Result<Vec<f64>, ModelError> {
    let s = StateVector::new(model.layout(), y.to_vec())?;
    Ok(model.rhs(&s)?.into_values())
}

/// Index of the most negative component, if any component is negative.
fn most_negative(y: &[f64]) -> Option<usize> {
    let mut idx = None;
    let mut worst = 0.0;
    for (i, &v) in y.iter().enumerate() {
        if v < worst {
            worst = v;
            idx = Some(i);
        }
    }
    idx
}

/// Clamps components in [-abs_tol, 0) to zero; returns whether any moved.
fn clamp_small_negatives(y: &mut [f64], abs_tol: f64) -> bool {
    let mut touched = false;
    for v in y.iter_mut() {
        if *v < 0.0 && *v >= -abs_tol {
            *v = 0.0;
            touched = true;
        }
    }
    touched
}

struct GuardCounters {
    clamped: usize,
    retried: usize,
}

/// Integrates `model` from `start` per `cfg`, emitting every accepted step.
pub fn integrate(
    model: &Model,
    start: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    cfg.validate()?;
    model.validate().map_err(IntegrateError::Model)?;
    if start.layout() != model.layout() {
        return Err(ModelError::LayoutMismatch {
            expected: model.layout(),
            got: start.layout(),
        }
        .into());
    }
    if !start.is_admissible(1e-9) {
        return Err(IntegrateError::InadmissibleStart(format!(
            "state {:?} leaves the closed positive cone (tolerance 1e-9)",
            start.values()
        )));
    }
    let mut counters = GuardCounters { clamped: 0, retried: 0 };
    let (times, states) = match cfg.method {
        Method::Rk45Adaptive => run_rk45(model, start.values(), cfg, &mut counters)?,
        Method::Rk4Fixed => run_rk4(model, start.values(), cfg, &mut counters)?,
    };
    Ok(Trajectory {
        model: model.name().to_string(),
        layout: model.layout(),
        times,
        states,
        clamped_steps: counters.clamped,
        retried_steps: counters.retried,
        config: *cfg,
    })
}

type Grid = (Vec<f64>, Vec<Vec<f64>>);

fn run_rk45(
    model: &Model,
    y0: &[f64],
    cfg: &IntegratorConfig,
    counters: &mut GuardCounters,
) -> Result<Grid, IntegrateError> {
    let dim = y0.len();
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    let mut t = 0.0f64;
    let mut dt = cfg.dt.min(cfg.t_end);
    let mut blame = 0usize;

    let mut k = vec![vec![0.0; dim]; 7];
    k[0] = rhs_raw(model, &y).map_err(IntegrateError::Model)?;

    let mut stage = vec![0.0; dim];
    while t < cfg.t_end {
        dt = dt.min(cfg.t_end - t);
        if dt < MIN_DT {
            return Err(IntegrateError::StepUnderflow { t, dt, component: blame });
        }

        // stages 2..=6 from the tableau
        let mut stage_failed = false;
        for s in 1..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, row) in A[s - 1].iter().enumerate().take(s) {
                    acc += row * k[j][i];
                }
                stage[i] = y[i] + dt * acc;
            }
            match rhs_raw(model, &stage) {
                Ok(f) => k[s] = f,
                Err(_) => {
                    stage_failed = true;
                    break;
                }
            }
        }
        if stage_failed {
            counters.retried += 1;
            dt *= 0.5;
            continue;
        }

        // fifth-order candidate
        let mut y1 = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for s in 0..6 {
                acc += B5[s] * k[s][i];
            }
            y1[i] = y[i] + dt * acc;
        }
        let k7 = match rhs_raw(model, &y1) {
            Ok(f) => f,
            Err(_) => {
                counters.retried += 1;
                dt *= 0.5;
                continue;
            }
        };
        k[6] = k7;

        // scaled RMS of the embedded error
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut de = 0.0;
            for s in 0..7 {
                de += E[s] * k[s][i];
            }
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
            let r = dt * de / scale;
            err_sq += r * r;
        }
        let err = (err_sq / dim as f64).sqrt();

        if err > 1.0 {
            counters.retried += 1;
            dt *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }

        if cfg.positivity_guard {
            if let Some(i) = most_negative(&y1) {
                if y1[i] < -cfg.abs_tol {
                    blame = i;
                    counters.retried += 1;
                    dt *= 0.5;
                    continue;
                }
                if clamp_small_negatives(&mut y1, cfg.abs_tol) {
                    counters.clamped += 1;
                    // FSAL slope must match the clamped state
                    match rhs_raw(model, &y1) {
                        Ok(f) => k[6] = f,
                        Err(_) => {
                            counters.retried += 1;
                            dt *= 0.5;
                            continue;
                        }
                    }
                }
            }
        }

        // an unshrunk clipped step ends the run exactly at t_end
        t = if dt >= cfg.t_end - t { cfg.t_end } else { t + dt };
        y = y1;
        k.swap(0, 6);
        times.push(t);
        states.push(y.clone());
        dt *= (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
    }
    Ok((times, states))
}

fn rk4_once(model: &Model, y: &[f64], dt: f64) -> Result<Vec<f64>, ModelError> {
    let dim = y.len();
    let k1 = rhs_raw(model, y)?;
    let mut stage = vec![0.0; dim];
    for i in 0..dim {
        stage[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = rhs_raw(model, &stage)?;
    for i in 0..dim {
        stage[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = rhs_raw(model, &stage)?;
    for i in 0..dim {
        stage[i] = y[i] + dt * k3[i];
    }
    let k4 = rhs_raw(model, &stage)?;
    let mut out = vec![0.0; dim];
    for i in 0..dim {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// One fixed grid interval, subdividing internally when the guard trips.
fn rk4_span(
    model: &Model,
    t: f64,
    dt: f64,
    y: &[f64],
    cfg: &IntegratorConfig,
    counters: &mut GuardCounters,
    depth: usize,
) -> Result<Vec<f64>, IntegrateError> {
    let attempt = rk4_once(model, y, dt);
    let violation = match attempt {
        Ok(mut y1) => {
            if !cfg.positivity_guard {
                return Ok(y1);
            }
            match most_negative(&y1) {
                Some(i) if y1[i] < -cfg.abs_tol => Some(i),
                Some(_) => {
                    if clamp_small_negatives(&mut y1, cfg.abs_tol) {
                        counters.clamped += 1;
                    }
                    return Ok(y1);
                }
                None => return Ok(y1),
            }
        }
        Err(_) => None,
    };
    if depth >= 30 || 0.5 * dt < MIN_DT {
        return Err(IntegrateError::StepUnderflow {
            t,
            dt,
            component: violation.unwrap_or(0),
        });
    }
    counters.retried += 1;
    let half = 0.5 * dt;
    let mid = rk4_span(model, t, half, y, cfg, counters, depth + 1)?;
    rk4_span(model, t + half, half, &mid, cfg, counters, depth + 1)
}

fn run_rk4(
    model: &Model,
    y0: &[f64],
    cfg: &IntegratorConfig,
    counters: &mut GuardCounters,
) -> Result<Grid, IntegrateError> {
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    let mut step = 0u64;
    loop {
        let t = step as f64 * cfg.dt;
        if t >= cfg.t_end {
            break;
        }
        let dt = cfg.dt.min(cfg.t_end - t);
        y = rk4_span(model, t, dt, &y, cfg, counters, 0)?;
        step += 1;
        let t_next = (step as f64 * cfg.dt).min(cfg.t_end);
        times.push(t_next);
        states.push(y.clone());
        if t_next >= cfg.t_end {
            break;
        }
    }
    Ok((times, states))
}

/// Min or max.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Min,
    Max,
}

/// One feature of a trajectory component: where it peaks or bottoms out.
/// Times of interior extrema are sharpened with a parabolic fit through the
/// three surrounding grid points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Landmark {
    pub component: String,
    pub kind: Extremum,
    pub value: f64,
    pub time: f64,
    /// True for the component's global extremum over the whole run, false
    /// for entries from the first-local-extrema list.
    pub global: bool,
}

/// Landmarks of every component, plus a flag for constant trajectories
/// where extrema are meaningless.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LandmarkReport {
    pub landmarks: Vec<Landmark>,
    pub degenerate: bool,
}

impl LandmarkReport {
    /// Convenience lookup: landmarks of one component and kind, global or
    /// local, in emission order (global first, then by time).
    pub fn select(&self, component: &str, kind: Extremum, global: bool) -> Vec<&Landmark> {
        self.landmarks
            .iter()
            .filter(|l| l.component == component && l.kind == kind && l.global == global)
            .collect()
    }
}

/// Vertex of the parabola through three points; None when degenerate or
/// outside the bracket.
fn parabola_vertex(
    (t0, y0): (f64, f64),
    (t1, y1): (f64, f64),
    (t2, y2): (f64, f64),
) -> Option<(f64, f64)> {
    let h1 = t0 - t1;
    let h2 = t2 - t1;
    if h1 == 0.0 || h2 == 0.0 || h1 == h2 {
        return None;
    }
    let d1 = (y0 - y1) / h1;
    let d2 = (y2 - y1) / h2;
    let a = (d2 - d1) / (h2 - h1);
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let b = d1 - a * h1;
    let dt = -b / (2.0 * a);
    if !dt.is_finite() || dt < h1 || dt > h2 {
        return None;
    }
    Some((t1 + dt, y1 + dt * (b + a * dt)))
}

/// Finds per-component global extrema and the first two local minima and
/// maxima (by time) of each component.
pub fn detect_landmarks(traj: &Trajectory) -> LandmarkReport {
    let names = traj.layout.component_names();
    let n = traj.len();
    let mut landmarks = Vec::new();
    let mut any_varies = false;

    for (ci, name) in names.iter().enumerate() {
        let ys: Vec<f64> = traj.component(ci).collect();
        if n < 2 || ys.iter().all(|&v| v == ys[0]) {
            continue;
        }
        any_varies = true;

        let refine = |idx: usize| -> (f64, f64) {
            if idx == 0 || idx + 1 >= n {
                return (traj.times[idx], ys[idx]);
            }
            parabola_vertex(
                (traj.times[idx - 1], ys[idx - 1]),
                (traj.times[idx], ys[idx]),
                (traj.times[idx + 1], ys[idx + 1]),
            )
            .unwrap_or((traj.times[idx], ys[idx]))
        };

        let (mut imin, mut imax) = (0, 0);
        for i in 1..n {
            if ys[i] < ys[imin] {
                imin = i;
            }
            if ys[i] > ys[imax] {
                imax = i;
            }
        }
        for (idx, kind) in [(imin, Extremum::Min), (imax, Extremum::Max)] {
            let (time, value) = refine(idx);
            landmarks.push(Landmark { component: name.clone(), kind, value, time, global: true });
        }

        // local extrema: sign changes of consecutive differences, treating
        // flat stretches as part of the preceding run
        let mut mins = 0;
        let mut maxs = 0;
        let mut prev_sign = 0i8;
        let mut last_move_end = 0usize;
        for i in 1..n {
            let d = ys[i] - ys[i - 1];
            let s: i8 = if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                0
            };
            if s == 0 {
                continue;
            }
            if prev_sign != 0 && s != prev_sign && (mins < 2 || maxs < 2) {
                let kind = if s > 0 { Extremum::Min } else { Extremum::Max };
                let count = match kind {
                    Extremum::Min => &mut mins,
                    Extremum::Max => &mut maxs,
                };
                if *count < 2 {
                    *count += 1;
                    let (time, value) = refine(last_move_end);
                    landmarks.push(Landmark {
                        component: name.clone(),
                        kind,
                        value,
                        time,
                        global: false,
                    });
                }
            }
            prev_sign = s;
            last_move_end = i;
        }
    }

    LandmarkReport { landmarks, degenerate: !any_varies }
}

/// Why an empirical-order probe may be unusable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RichardsonFlag {
    Conclusive,
    /// The positivity guard clamped or subdivided, breaking the smooth
    /// error expansion the probe relies on.
    GuardActivated,
    /// End states coincide between refinements; nothing to measure.
    ZeroDifference,
}

/// Empirical convergence order from end states at dt, dt/2, dt/4.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RichardsonReport {
    pub order: Option<f64>,
    pub coarse_diff: f64,
    pub fine_diff: f64,
    pub flag: RichardsonFlag,
}

/// Runs the configured scheme at fixed steps dt, dt/2, dt/4 and reports
/// log2(|y_dt - y_dt/2| / |y_dt/2 - y_dt/4|) in the max norm. The adaptive
/// method is probed through its fifth-order formula on a fixed grid.
pub fn richardson_check(
    model: &Model,
    start: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<RichardsonReport, IntegrateError> {
    cfg.validate()?;
    let mut ends = Vec::with_capacity(3);
    let mut guard_hit = false;
    for halvings in 0..3 {
        let sub = IntegratorConfig {
            dt: cfg.dt / f64::powi(2.0, halvings),
            ..*cfg
        };
        let traj = match cfg.method {
            Method::Rk4Fixed => integrate(model, start, &sub)?,
            Method::Rk45Adaptive => {
                // fixed-grid run of the fifth-order formula: disable error
                // control by accepting every step at the requested dt
                integrate_dp5_fixed(model, start, &sub)?
            }
        };
        guard_hit |= traj.clamped_steps > 0 || traj.retried_steps > 0;
        ends.push(traj.states.last().expect("trajectory is never empty").clone());
    }
    let diff = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let coarse = diff(&ends[0], &ends[1]);
    let fine = diff(&ends[1], &ends[2]);
    let (order, flag) = if guard_hit {
        (None, RichardsonFlag::GuardActivated)
    } else if coarse == 0.0 || fine == 0.0 {
        (None, RichardsonFlag::ZeroDifference)
    } else {
        ((coarse / fine).log2().into(), RichardsonFlag::Conclusive)
    };
    Ok(RichardsonReport { order, coarse_diff: coarse, fine_diff: fine, flag })
}

/// Fixed-grid Dormand-Prince (fifth-order solution only), for order probes.
fn integrate_dp5_fixed(
    model: &Model,
    start: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    let dim = start.dim();
    let mut counters = GuardCounters { clamped: 0, retried: 0 };
    let mut times = vec![0.0];
    let mut states = vec![start.values().to_vec()];
    let mut y = start.values().to_vec();
    let mut stage = vec![0.0; dim];
    let mut k = vec![vec![0.0; dim]; 6];
    let mut step = 0u64;
    loop {
        let t = step as f64 * cfg.dt;
        if t >= cfg.t_end {
            break;
        }
        let dt = cfg.dt.min(cfg.t_end - t);
        k[0] = rhs_raw(model, &y).map_err(IntegrateError::Model)?;
        for s in 1..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, row) in A[s - 1].iter().enumerate().take(s) {
                    acc += row * k[j][i];
                }
                stage[i] = y[i] + dt * acc;
            }
            k[s] = rhs_raw(model, &stage).map_err(IntegrateError::Model)?;
        }
        for i in 0..dim {
            let mut acc = 0.0;
            for s in 0..6 {
                acc += B5[s] * k[s][i];
            }
            y[i] += dt * acc;
        }
        if cfg.positivity_guard {
            if let Some(i) = most_negative(&y) {
                if y[i] < -cfg.abs_tol {
                    return Err(IntegrateError::StepUnderflow { t, dt, component: i });
                }
                if clamp_small_negatives(&mut y, cfg.abs_tol) {
                    counters.clamped += 1;
                }
            }
        }
        step += 1;
        let t_next = (step as f64 * cfg.dt).min(cfg.t_end);
        times.push(t_next);
        states.push(y.clone());
        if t_next >= cfg.t_end {
            break;
        }
    }
    Ok(Trajectory {
        model: model.name().to_string(),
        layout: model.layout(),
        times,
        states,
        clamped_steps: counters.clamped,
        retried_steps: counters.retried,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DlrParams, NowakMayParams, PerelsonParams};

    fn nowak_may() -> Model {
        Model::NowakMay(NowakMayParams::default())
    }

    #[test]
    fn config_validation() {
        IntegratorConfig::default().validate().unwrap();
        let bad = IntegratorConfig { dt: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { rel_tol: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { t_end: f64::NAN, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn virus_free_decay_matches_closed_form() {
        // with V = 0 the T equation is linear: T(t) = 1 - 0.5 exp(-beta t)
        let m = nowak_may();
        let cfg = IntegratorConfig { t_end: 100.0, ..Default::default() };
        let traj = integrate(&m, &StateVector::tuv(0.5, 0.0, 0.0), &cfg).unwrap();
        for (i, t) in traj.times.iter().enumerate() {
            let exact = 1.0 - 0.5 * (-0.01 * t).exp();
            assert!(
                (traj.states[i][0] - exact).abs() < 1e-8,
                "t = {t}: {} vs {exact}",
                traj.states[i][0]
            );
        }
        assert_eq!(*traj.times.last().unwrap(), 100.0);
    }

    #[test]
    fn adaptive_run_is_reproducible() {
        let m = nowak_may();
        let cfg = IntegratorConfig { t_end: 50.0, ..Default::default() };
        let s0 = StateVector::tuv(1.0, 0.05, 0.05);
        let a = integrate(&m, &s0, &cfg).unwrap();
        let b = integrate(&m, &s0, &cfg).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn inadmissible_start_is_rejected() {
        let m = nowak_may();
        let cfg = IntegratorConfig::default();
        let err = integrate(&m, &StateVector::tuv(1.0, -0.1, 0.0), &cfg).unwrap_err();
        assert!(matches!(err, IntegrateError::InadmissibleStart(_)));
    }

    #[test]
    fn unreachable_tolerances_underflow_the_step() {
        let m = nowak_may();
        let cfg = IntegratorConfig {
            rel_tol: 1e-300,
            abs_tol: 1e-300,
            t_end: 1.0,
            ..Default::default()
        };
        let err = integrate(&m, &StateVector::tuv(1.0, 0.05, 0.05), &cfg).unwrap_err();
        assert!(matches!(err, IntegrateError::StepUnderflow { .. }));
    }

    #[test]
    fn rk4_grid_is_uniform_and_complete() {
        let m = nowak_may();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 0.25,
            t_end: 10.0,
            ..Default::default()
        };
        let traj = integrate(&m, &StateVector::tuv(1.0, 0.05, 0.05), &cfg).unwrap();
        assert_eq!(traj.len(), 41);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 10.0);
        for w in traj.times.windows(2) {
            assert!((w[1] - w[0] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_partial_final_step() {
        let m = nowak_may();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 0.4,
            t_end: 1.0,
            ..Default::default()
        };
        let traj = integrate(&m, &StateVector::tuv(0.9, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.4, 0.8, 1.0]);
    }

    #[test]
    fn rk4_halving_shrinks_error_by_sixteen_ish() {
        // smooth problem, no guard activity: fourth order means ~16x
        let m = nowak_may();
        let s0 = StateVector::tuv(1.0, 0.05, 0.05);
        let reference = {
            let cfg = IntegratorConfig {
                rel_tol: 1e-13,
                abs_tol: 1e-14,
                t_end: 20.0,
                ..Default::default()
            };
            integrate(&m, &s0, &cfg).unwrap().final_state().into_values()
        };
        let end_err = |dt: f64| {
            let cfg = IntegratorConfig {
                method: Method::Rk4Fixed,
                dt,
                t_end: 20.0,
                ..Default::default()
            };
            let y = integrate(&m, &s0, &cfg).unwrap().final_state().into_values();
            y.iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let e1 = end_err(0.1);
        let e2 = end_err(0.05);
        assert!(e1 / e2 >= 8.0, "ratio {} (errors {e1}, {e2})", e1 / e2);
    }

    #[test]
    fn richardson_reports_fourth_order() {
        // dt small enough that the h^4 term dominates the expansion
        let m = nowak_may();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 0.05,
            t_end: 30.0,
            ..Default::default()
        };
        let rep = richardson_check(&m, &StateVector::tuv(1.0, 0.05, 0.05), &cfg).unwrap();
        assert_eq!(rep.flag, RichardsonFlag::Conclusive);
        let order = rep.order.unwrap();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn richardson_on_linear_decay() {
        // V = 0 keeps only the linear T equation; dt is large so the
        // fourth-order term stays far above rounding noise
        let m = nowak_may();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 2.0,
            t_end: 100.0,
            ..Default::default()
        };
        let rep = richardson_check(&m, &StateVector::tuv(0.5, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(rep.flag, RichardsonFlag::Conclusive);
        let order = rep.order.unwrap();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn richardson_flags_equilibrium_runs() {
        let m = nowak_may();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 0.1,
            t_end: 5.0,
            ..Default::default()
        };
        let rep = richardson_check(&m, &StateVector::tuv(1.0, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(rep.flag, RichardsonFlag::ZeroDifference);
        assert!(rep.order.is_none());
    }

    #[test]
    fn guard_keeps_states_admissible() {
        // strong daily decay drives V toward zero; the guard must keep all
        // emitted components sane for both steppers
        let m = Model::Perelson(PerelsonParams::default());
        let s0 = StateVector::tuvw(1.0, 0.0, 0.05, 0.05);
        for method in [Method::Rk45Adaptive, Method::Rk4Fixed] {
            let cfg = IntegratorConfig { method, t_end: 300.0, ..Default::default() };
            let traj = integrate(&m, &s0, &cfg).unwrap();
            for s in &traj.states {
                assert!(s[0] > 0.0);
                for &v in &s[1..] {
                    assert!(v >= 0.0, "negative component {v}");
                }
            }
        }
    }

    #[test]
    fn landmarks_on_a_sine_wave_shape() {
        // drive a known shape through the landmark detector using a
        // hand-built trajectory
        let n = 2001;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let states: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| vec![2.0 + (t).sin(), 0.0, 0.0])
            .collect();
        let traj = Trajectory {
            model: "nowak-may".into(),
            layout: StateLayout::Tuv,
            times,
            states,
            clamped_steps: 0,
            retried_steps: 0,
            config: IntegratorConfig::default(),
        };
        let rep = detect_landmarks(&traj);
        assert!(!rep.degenerate);
        let tmax = rep.select("T", Extremum::Max, false);
        let tmin = rep.select("T", Extremum::Min, false);
        assert_eq!(tmax.len(), 2);
        assert_eq!(tmin.len(), 2);
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!((tmax[0].time - half_pi).abs() < 1e-4, "first max at {}", tmax[0].time);
        assert!((tmax[0].value - 3.0).abs() < 1e-8);
        assert!((tmin[0].time - 3.0 * half_pi).abs() < 1e-4);
        assert!((tmax[1].time - 5.0 * half_pi).abs() < 1e-4);
        // global max matches the first local max here
        let gmax = rep.select("T", Extremum::Max, true);
        assert_eq!(gmax.len(), 1);
        assert!((gmax[0].value - 3.0).abs() < 1e-8);
        // U and V are constant: no landmarks for them
        assert!(rep.select("U", Extremum::Min, true).is_empty());
    }

    #[test]
    fn landmarks_flag_constant_trajectories() {
        let m = Model::Dlr(DlrParams::default());
        let cfg = IntegratorConfig { t_end: 10.0, ..Default::default() };
        let traj = integrate(&m, &m.health(), &cfg).unwrap();
        let rep = detect_landmarks(&traj);
        assert!(rep.degenerate);
        assert!(rep.landmarks.is_empty());
    }

    #[test]
    fn parabola_vertex_refines_quadratics() {
        // exact quadratic: vertex recovered exactly up to rounding
        let f = |t: f64| 3.0 + (t - 1.3) * (t - 1.3);
        let v = parabola_vertex((1.0, f(1.0)), (1.25, f(1.25)), (1.6, f(1.6))).unwrap();
        assert!((v.0 - 1.3).abs() < 1e-12);
        assert!((v.1 - 3.0).abs() < 1e-12);
        // degenerate: collinear points have no vertex
        assert!(parabola_vertex((0.0, 1.0), (1.0, 2.0), (2.0, 3.0)).is_none());
    }
}
