//! C interface to the within-host viral dynamics toolkit.
//!
//! Design rules, enforced everywhere:
//!
//! - opaque handles ([`VdModel`], [`VdTrajectory`]) own their Rust values
//!   and are released with the matching `vd_*_free` call
//! - every fallible function returns a [`VdStatus`]; the accompanying
//!   message is readable through [`vd_last_error`] on the same thread
//! - structured results cross the boundary as heap-allocated UTF-8 JSON
//!   (release with [`vd_string_free`]), numeric bulk data as caller-owned
//!   `double` buffers
//! - no panic crosses the boundary: every entry point is wrapped and a
//!   caught panic reports [`VdStatus::InternalPanic`]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use virodyn::analysis::{
    classify_stability, dlr_derived, fixed_points_dlr, fixed_points_nowak_may,
    fixed_points_perelson, fixed_points_snedecor, snedecor_discriminant, thresholds_snedecor,
    FixedPointKind, FixedPointReport,
};
use virodyn::error::{AnalysisError, IntegrateError, ModelError};
use virodyn::integrator::{detect_landmarks, integrate, IntegratorConfig, Method, Trajectory};
use virodyn::model::{
    DlrParams, Model, MultiStrainParams, NowakMayParams, PerelsonParams, SnedecorParams,
    StateVector,
};
use virodyn::verification::{
    check_global_bound, check_macroscopic_laws, check_positivity, reduction_equivalence,
    TheoremReport, VerifyError,
};

/// Outcome of a call. `VD_STATUS_OK` is 0; every other value names a failure
/// class and leaves a message in `vd_last_error()`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VdStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Arguments were well-formed but rejected: unknown model id, bad
    /// parameter value, inadmissible state, invalid solver settings.
    InvalidArgument = 3,
    /// The computation itself failed: step size underflow, non-finite
    /// values, or an eigenvalue/root iteration that did not converge.
    NumericalFailure = 4,
    /// A caller-provided buffer is smaller than the data to copy.
    BufferTooSmall = 5,
    /// A bug: an internal panic was caught at the boundary.
    InternalPanic = 6,
}

/// Time stepping scheme.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VdMethod {
    /// Embedded Dormand-Prince 4(5) pair with adaptive step control.
    Rk45Adaptive = 0,
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4Fixed = 1,
}

/// Solver settings; get defaults from `vd_integrator_defaults()`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct VdIntegratorOptions {
    pub method: VdMethod,
    /// Step size (days); the initial trial step for the adaptive method.
    pub dt: f64,
    /// Relative error tolerance (adaptive method only).
    pub rel_tol: f64,
    /// Absolute error tolerance (adaptive method only).
    pub abs_tol: f64,
    /// End of the integration window (days), starting from 0.
    pub t_end: f64,
    /// Keep every emitted state admissible by clamping tiny negative
    /// overshoots and retrying oversized steps.
    pub positivity_guard: bool,
}

/// Opaque handle to a validated model (equations plus parameter values).
pub struct VdModel {
    inner: Model,
}

/// Opaque handle to a computed trajectory.
pub struct VdTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: VdStatus, message: impl Display) -> VdStatus {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).expect("NUL bytes stripped above");
    });
    status
}

fn model_err(e: ModelError) -> VdStatus {
    fail(VdStatus::InvalidArgument, e)
}

fn integrate_err(e: IntegrateError) -> VdStatus {
    let status = match &e {
        IntegrateError::StepUnderflow { .. } | IntegrateError::Model(_) => {
            VdStatus::NumericalFailure
        }
        IntegrateError::InadmissibleStart(_) | IntegrateError::BadConfig(_) => {
            VdStatus::InvalidArgument
        }
    };
    fail(status, e)
}

fn analysis_err(e: AnalysisError) -> VdStatus {
    let status = match &e {
        AnalysisError::Model(_) | AnalysisError::Domain(_) => VdStatus::InvalidArgument,
        AnalysisError::RootNotConverged { .. } | AnalysisError::EigenNotConverged { .. } => {
            VdStatus::NumericalFailure
        }
    };
    fail(status, e)
}

fn verify_err(e: VerifyError) -> VdStatus {
    match e {
        VerifyError::Model(inner) => model_err(inner),
        VerifyError::Integrate(inner) => integrate_err(inner),
        VerifyError::Analysis(inner) => analysis_err(inner),
        VerifyError::NonUniformGrid(_) | VerifyError::TooShort(_) => {
            fail(VdStatus::InvalidArgument, e)
        }
    }
}

/// Runs a body with a panic trap so no unwind crosses the C boundary.
fn guarded(body: impl FnOnce() -> VdStatus) -> VdStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let what = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic payload".into());
        fail(VdStatus::InternalPanic, format!("internal panic: {what}"))
    })
}

/// Borrows a NUL-terminated UTF-8 argument.
///
/// # Safety
/// `p` must be NULL or point to a NUL-terminated string.
unsafe fn utf8_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, VdStatus> {
    if p.is_null() {
        return Err(fail(VdStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(VdStatus::InvalidUtf8, format!("{what} is not UTF-8: {e}")))
}

fn require_out<T>(out: *mut T, what: &str) -> Result<(), VdStatus> {
    if out.is_null() {
        Err(fail(VdStatus::NullArgument, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

fn emit_json<T: serde::Serialize>(value: &T, out: *mut *mut c_char) -> VdStatus {
    let text = match serde_json::to_string(value) {
        Ok(t) => t,
        Err(e) => return fail(VdStatus::InternalPanic, format!("serialization failed: {e}")),
    };
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            VdStatus::Ok
        }
        Err(e) => fail(VdStatus::InternalPanic, format!("embedded NUL in JSON: {e}")),
    }
}

fn parse_model(model_id: &str, params_json: &str) -> Result<Model, VdStatus> {
    fn params<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, VdStatus> {
        serde_json::from_str(text).map_err(|e| {
            fail(
                VdStatus::InvalidArgument,
                format!("parameter JSON rejected: {e}"),
            )
        })
    }
    let model = match model_id {
        "nowak-may" => Model::NowakMay(params::<NowakMayParams>(params_json)?),
        "snedecor" => Model::Snedecor(params::<SnedecorParams>(params_json)?),
        "perelson" => Model::Perelson(params::<PerelsonParams>(params_json)?),
        "dlr" => Model::Dlr(params::<DlrParams>(params_json)?),
        "multi-strain" => Model::MultiStrain(params::<MultiStrainParams>(params_json)?),
        other => {
            return Err(fail(
                VdStatus::InvalidArgument,
                format!(
                    "unknown model id `{other}` (expected nowak-may, snedecor, perelson, dlr, or multi-strain)"
                ),
            ))
        }
    };
    model.validate().map_err(model_err)?;
    Ok(model)
}

/// Builds a model from its id and a JSON object of parameter overrides.
///
/// `model_id` is one of "nowak-may", "snedecor", "perelson", "dlr",
/// "multi-strain". `params_json` may be NULL or "{}" for published defaults;
/// fields not present keep their default value, unknown fields are
/// rejected. The handle must be released with `vd_model_free`.
///
/// # Safety
/// `model_id` and (when non-NULL) `params_json` must be NUL-terminated;
/// `out_model` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vd_model_new(
    model_id: *const c_char,
    params_json: *const c_char,
    out_model: *mut *mut VdModel,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_model, "out_model") {
            return s;
        }
        *out_model = ptr::null_mut();
        let id = match utf8_arg(model_id, "model_id") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let params = if params_json.is_null() {
            "{}"
        } else {
            match utf8_arg(params_json, "params_json") {
                Ok(v) => v,
                Err(s) => return s,
            }
        };
        match parse_model(id, params) {
            Ok(inner) => {
                *out_model = Box::into_raw(Box::new(VdModel { inner }));
                VdStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Releases a model handle. NULL is a no-op.
///
/// # Safety
/// `model` must have come from `vd_model_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vd_model_free(model: *mut VdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of state components of the model (3, 4, or 4n). Returns 0 for
/// NULL.
///
/// # Safety
/// `model` must be NULL or a live handle from `vd_model_new`.
#[no_mangle]
pub unsafe extern "C" fn vd_model_dim(model: *const VdModel) -> usize {
    if model.is_null() {
        0
    } else {
        (*model).inner.dim()
    }
}

/// Describes the model as JSON: id, dimension, component names in state
/// order, and the full parameter set in effect.
///
/// # Safety
/// `model` must be a live handle; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vd_model_describe_json(
    model: *const VdModel,
    out_json: *mut *mut c_char,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_json, "out_json") {
            return s;
        }
        *out_json = ptr::null_mut();
        if model.is_null() {
            return fail(VdStatus::NullArgument, "model is NULL");
        }
        let m = &(*model).inner;
        let params = match m {
            Model::NowakMay(p) => serde_json::to_value(p),
            Model::Snedecor(p) => serde_json::to_value(p),
            Model::Perelson(p) => serde_json::to_value(p),
            Model::Dlr(p) => serde_json::to_value(p),
            Model::MultiStrain(p) => serde_json::to_value(p),
        }
        .expect("parameter structs serialize infallibly");
        let names = m.layout().component_names();
        let doc = serde_json::json!({
            "model": m.name(),
            "dim": m.dim(),
            "components": names,
            "params": params,
        });
        emit_json(&doc, out_json)
    })
}

/// The solver settings used when `options` is NULL: adaptive stepping,
/// dt = 0.01, rel_tol = 1e-8, abs_tol = 1e-10, t_end = 600, guard on.
#[no_mangle]
pub extern "C" fn vd_integrator_defaults() -> VdIntegratorOptions {
    let d = IntegratorConfig::default();
    VdIntegratorOptions {
        method: match d.method {
            Method::Rk45Adaptive => VdMethod::Rk45Adaptive,
            Method::Rk4Fixed => VdMethod::Rk4Fixed,
        },
        dt: d.dt,
        rel_tol: d.rel_tol,
        abs_tol: d.abs_tol,
        t_end: d.t_end,
        positivity_guard: d.positivity_guard,
    }
}

fn config_from(options: &VdIntegratorOptions) -> IntegratorConfig {
    IntegratorConfig {
        method: match options.method {
            VdMethod::Rk45Adaptive => Method::Rk45Adaptive,
            VdMethod::Rk4Fixed => Method::Rk4Fixed,
        },
        dt: options.dt,
        rel_tol: options.rel_tol,
        abs_tol: options.abs_tol,
        t_end: options.t_end,
        positivity_guard: options.positivity_guard,
    }
}

/// Integrates the model from `y0` (length `dim`, which must equal
/// `vd_model_dim`). `options` may be NULL for defaults. On success the
/// trajectory handle must be released with `vd_trajectory_free`.
///
/// # Safety
/// `model` must be a live handle; `y0` must point to `dim` doubles;
/// `options` must be NULL or valid; `out_trajectory` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vd_simulate(
    model: *const VdModel,
    y0: *const f64,
    dim: usize,
    options: *const VdIntegratorOptions,
    out_trajectory: *mut *mut VdTrajectory,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_trajectory, "out_trajectory") {
            return s;
        }
        *out_trajectory = ptr::null_mut();
        if model.is_null() {
            return fail(VdStatus::NullArgument, "model is NULL");
        }
        if y0.is_null() {
            return fail(VdStatus::NullArgument, "y0 is NULL");
        }
        let m = &(*model).inner;
        if dim != m.dim() {
            return fail(
                VdStatus::InvalidArgument,
                format!("y0 has {dim} components but the model needs {}", m.dim()),
            );
        }
        let values = slice::from_raw_parts(y0, dim).to_vec();
        let start = match StateVector::new(m.layout(), values) {
            Ok(s) => s,
            Err(e) => return model_err(e),
        };
        let cfg = if options.is_null() {
            IntegratorConfig::default()
        } else {
            config_from(&*options)
        };
        match integrate(m, &start, &cfg) {
            Ok(inner) => {
                *out_trajectory = Box::into_raw(Box::new(VdTrajectory { inner }));
                VdStatus::Ok
            }
            Err(e) => integrate_err(e),
        }
    })
}

/// Releases a trajectory handle. NULL is a no-op.
///
/// # Safety
/// `trajectory` must have come from `vd_simulate` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vd_trajectory_free(trajectory: *mut VdTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of stored samples. Returns 0 for NULL.
///
/// # Safety
/// `trajectory` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vd_trajectory_len(trajectory: *const VdTrajectory) -> usize {
    if trajectory.is_null() {
        0
    } else {
        (*trajectory).inner.len()
    }
}

/// Number of state components per sample. Returns 0 for NULL.
///
/// # Safety
/// `trajectory` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vd_trajectory_dim(trajectory: *const VdTrajectory) -> usize {
    if trajectory.is_null() {
        0
    } else {
        (*trajectory).inner.layout.dim()
    }
}

/// Copies the sample times (days) into `buf`. `capacity` must be at least
/// `vd_trajectory_len`.
///
/// # Safety
/// `trajectory` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn vd_trajectory_times(
    trajectory: *const VdTrajectory,
    buf: *mut f64,
    capacity: usize,
) -> VdStatus {
    guarded(|| {
        if trajectory.is_null() {
            return fail(VdStatus::NullArgument, "trajectory is NULL");
        }
        if buf.is_null() {
            return fail(VdStatus::NullArgument, "buf is NULL");
        }
        let times = &(*trajectory).inner.times;
        if capacity < times.len() {
            return fail(
                VdStatus::BufferTooSmall,
                format!("need {} doubles, got capacity {capacity}", times.len()),
            );
        }
        slice::from_raw_parts_mut(buf, times.len()).copy_from_slice(times);
        VdStatus::Ok
    })
}

/// Copies the states row-major (sample-by-sample) into `buf`. `capacity`
/// must be at least `len * dim`.
///
/// # Safety
/// `trajectory` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn vd_trajectory_states(
    trajectory: *const VdTrajectory,
    buf: *mut f64,
    capacity: usize,
) -> VdStatus {
    guarded(|| {
        if trajectory.is_null() {
            return fail(VdStatus::NullArgument, "trajectory is NULL");
        }
        if buf.is_null() {
            return fail(VdStatus::NullArgument, "buf is NULL");
        }
        let t = &(*trajectory).inner;
        let dim = t.layout.dim();
        let needed = t.len() * dim;
        if capacity < needed {
            return fail(
                VdStatus::BufferTooSmall,
                format!("need {needed} doubles, got capacity {capacity}"),
            );
        }
        let out = slice::from_raw_parts_mut(buf, needed);
        for (k, state) in t.states.iter().enumerate() {
            out[k * dim..(k + 1) * dim].copy_from_slice(state);
        }
        VdStatus::Ok
    })
}

/// Copies the final state into `buf`. `capacity` must be at least the
/// trajectory dimension.
///
/// # Safety
/// `trajectory` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn vd_trajectory_final_state(
    trajectory: *const VdTrajectory,
    buf: *mut f64,
    capacity: usize,
) -> VdStatus {
    guarded(|| {
        if trajectory.is_null() {
            return fail(VdStatus::NullArgument, "trajectory is NULL");
        }
        if buf.is_null() {
            return fail(VdStatus::NullArgument, "buf is NULL");
        }
        let t = &(*trajectory).inner;
        let last = match t.states.last() {
            Some(s) => s,
            None => return fail(VdStatus::NumericalFailure, "trajectory is empty"),
        };
        if capacity < last.len() {
            return fail(
                VdStatus::BufferTooSmall,
                format!("need {} doubles, got capacity {capacity}", last.len()),
            );
        }
        slice::from_raw_parts_mut(buf, last.len()).copy_from_slice(last);
        VdStatus::Ok
    })
}

/// Serializes the whole trajectory (times, states, solver counters) as
/// JSON.
///
/// # Safety
/// `trajectory` must be a live handle; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vd_trajectory_json(
    trajectory: *const VdTrajectory,
    out_json: *mut *mut c_char,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_json, "out_json") {
            return s;
        }
        *out_json = ptr::null_mut();
        if trajectory.is_null() {
            return fail(VdStatus::NullArgument, "trajectory is NULL");
        }
        emit_json(&(*trajectory).inner, out_json)
    })
}

/// Per-component global extrema and first local extrema of a trajectory,
/// as JSON.
///
/// # Safety
/// `trajectory` must be a live handle; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vd_landmarks_json(
    trajectory: *const VdTrajectory,
    out_json: *mut *mut c_char,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_json, "out_json") {
            return s;
        }
        *out_json = ptr::null_mut();
        if trajectory.is_null() {
            return fail(VdStatus::NullArgument, "trajectory is NULL");
        }
        emit_json(&detect_landmarks(&(*trajectory).inner), out_json)
    })
}

fn fixed_points_of(model: &Model) -> Result<Vec<FixedPointReport>, VdStatus> {
    let fps = match model {
        Model::NowakMay(p) => fixed_points_nowak_may(p),
        Model::Snedecor(p) => fixed_points_snedecor(p),
        Model::Perelson(p) => fixed_points_perelson(p),
        Model::Dlr(p) => fixed_points_dlr(p),
        Model::MultiStrain(_) => {
            return Err(fail(
                VdStatus::InvalidArgument,
                "fixed-point analysis needs a single-strain model",
            ))
        }
    };
    fps.map_err(analysis_err)
}

/// Equilibria of a single-strain model as a JSON array. With `classify`
/// true each entry also carries the Jacobian spectrum, a stability verdict,
/// and admissible unstable directions for boundary points.
///
/// # Safety
/// `model` must be a live handle; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vd_fixed_points_json(
    model: *const VdModel,
    classify: bool,
    out_json: *mut *mut c_char,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_json, "out_json") {
            return s;
        }
        *out_json = ptr::null_mut();
        if model.is_null() {
            return fail(VdStatus::NullArgument, "model is NULL");
        }
        let m = &(*model).inner;
        let mut fps = match fixed_points_of(m) {
            Ok(v) => v,
            Err(s) => return s,
        };
        if classify {
            let mut classified = Vec::with_capacity(fps.len());
            for fp in fps {
                match classify_stability(m, fp) {
                    Ok(done) => classified.push(done),
                    Err(e) => return analysis_err(e),
                }
            }
            fps = classified;
        }
        emit_json(&fps, out_json)
    })
}

/// Model-specific derived quantities as JSON: basic reproduction numbers,
/// seroconversion thresholds and the equilibrium discriminant, or the
/// antigenicity-structured scalars (eta, rho, v_bar, gamma_bound,
/// l_threshold), together with the seropositive equilibria.
///
/// # Safety
/// `model` must be a live handle; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vd_derived_json(
    model: *const VdModel,
    out_json: *mut *mut c_char,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_json, "out_json") {
            return s;
        }
        *out_json = ptr::null_mut();
        if model.is_null() {
            return fail(VdStatus::NullArgument, "model is NULL");
        }
        let m = &(*model).inner;
        let sero_states = |fps: &[FixedPointReport]| -> Vec<StateVector> {
            fps.iter()
                .filter(|fp| fp.kind == FixedPointKind::Seropositive)
                .map(|fp| fp.state.clone())
                .collect()
        };
        let doc = match m {
            Model::NowakMay(p) => {
                let fps = match fixed_points_nowak_may(p) {
                    Ok(v) => v,
                    Err(e) => return analysis_err(e),
                };
                serde_json::json!({
                    "model": "nowak-may",
                    "r0": p.a * p.gamma_nm / (p.alpha * p.xi_nm),
                    "seropositive_state": sero_states(&fps).pop(),
                })
            }
            Model::Snedecor(p) => {
                let thresholds = match thresholds_snedecor(p) {
                    Ok(t) => t,
                    Err(e) => return analysis_err(e),
                };
                let fps = match fixed_points_snedecor(p) {
                    Ok(v) => v,
                    Err(e) => return analysis_err(e),
                };
                let discriminant = snedecor_discriminant(p).map(|(value, rounding_bound)| {
                    serde_json::json!({"value": value, "rounding_bound": rounding_bound})
                });
                serde_json::json!({
                    "model": "snedecor",
                    "thresholds": thresholds,
                    "discriminant": discriminant,
                    "seropositive_state": sero_states(&fps).pop(),
                })
            }
            Model::Perelson(p) => {
                let fps = match fixed_points_perelson(p) {
                    Ok(v) => v,
                    Err(e) => return analysis_err(e),
                };
                serde_json::json!({
                    "model": "perelson",
                    "r0": p.a * p.theta * p.delta_p / (p.alpha * p.sigma_p),
                    "seropositive_state": sero_states(&fps).pop(),
                })
            }
            Model::Dlr(p) => {
                let derived = match dlr_derived(p) {
                    Ok(d) => d,
                    Err(e) => return analysis_err(e),
                };
                let fps = match fixed_points_dlr(p) {
                    Ok(v) => v,
                    Err(e) => return analysis_err(e),
                };
                let mut doc = serde_json::to_value(derived).expect("derived scalars serialize");
                doc["model"] = "dlr".into();
                doc["seropositive_states"] =
                    serde_json::to_value(sero_states(&fps)).expect("states serialize");
                doc
            }
            Model::MultiStrain(_) => {
                return fail(
                    VdStatus::InvalidArgument,
                    "derived quantities need a single-strain model",
                )
            }
        };
        emit_json(&doc, out_json)
    })
}

/// Runs the structural property checks that apply to this model against a
/// computed trajectory and returns the reports as a JSON array: positivity
/// always; the growth bound and the single-strain reduction agreement for
/// the antigenicity-structured model; the macroscopic balance laws for the
/// multi-strain system (fixed-step trajectories only).
///
/// # Safety
/// `model` and `trajectory` must be live handles; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vd_verify_json(
    model: *const VdModel,
    trajectory: *const VdTrajectory,
    out_json: *mut *mut c_char,
) -> VdStatus {
    guarded(|| {
        if let Err(s) = require_out(out_json, "out_json") {
            return s;
        }
        *out_json = ptr::null_mut();
        if model.is_null() {
            return fail(VdStatus::NullArgument, "model is NULL");
        }
        if trajectory.is_null() {
            return fail(VdStatus::NullArgument, "trajectory is NULL");
        }
        let m = &(*model).inner;
        let t = &(*trajectory).inner;
        if t.layout != m.layout() {
            return fail(
                VdStatus::InvalidArgument,
                format!(
                    "trajectory layout {:?} does not match the model's {:?}",
                    t.layout,
                    m.layout()
                ),
            );
        }
        let mut reports: Vec<TheoremReport> = vec![check_positivity(t)];
        match m {
            Model::Dlr(p) => {
                match check_global_bound(t, p) {
                    Ok(r) => reports.push(r),
                    Err(e) => return verify_err(e),
                }
                match reduction_equivalence(p) {
                    Ok(r) => reports.push(r),
                    Err(e) => return verify_err(e),
                }
            }
            Model::MultiStrain(p) => match check_macroscopic_laws(t, p) {
                Ok(r) => reports.push(r),
                Err(e) => return verify_err(e),
            },
            _ => {}
        }
        emit_json(&reports, out_json)
    })
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn vd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by the `*_json` functions. NULL is a no-op.
///
/// # Safety
/// `s` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn vd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
