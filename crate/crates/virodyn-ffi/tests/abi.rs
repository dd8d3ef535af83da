//! Exercises the C surface from Rust: handle lifecycles, buffer copies,
//! JSON payload shapes, and the status/message discipline on errors.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use virodyn_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(vd_last_error()).to_str().unwrap().to_owned() }
}

/// Parses and releases a returned JSON string.
unsafe fn take_json(p: *mut c_char) -> serde_json::Value {
    assert!(!p.is_null(), "expected a JSON payload");
    let v = serde_json::from_str(CStr::from_ptr(p).to_str().unwrap()).unwrap();
    vd_string_free(p);
    v
}

unsafe fn new_model(id: &str, params: Option<&str>) -> *mut VdModel {
    let id = cstr(id);
    let params = params.map(cstr);
    let mut model = ptr::null_mut();
    let status = vd_model_new(
        id.as_ptr(),
        params.as_ref().map_or(ptr::null(), |p| p.as_ptr()),
        &mut model,
    );
    assert_eq!(status, VdStatus::Ok, "{}", last_error());
    assert!(!model.is_null());
    model
}

#[test]
fn simulate_and_read_buffers_back() {
    unsafe {
        let model = new_model("dlr", Some(r#"{"tau": 20.0, "zeta": 3.0}"#));
        assert_eq!(vd_model_dim(model), 4);

        let mut options = vd_integrator_defaults();
        options.t_end = 50.0;
        let y0 = [1.0, 0.0, 0.05, 0.05];
        let mut traj = ptr::null_mut();
        let status = vd_simulate(model, y0.as_ptr(), y0.len(), &options, &mut traj);
        assert_eq!(status, VdStatus::Ok, "{}", last_error());

        let len = vd_trajectory_len(traj);
        let dim = vd_trajectory_dim(traj);
        assert!(len > 2);
        assert_eq!(dim, 4);

        let mut times = vec![0.0; len];
        assert_eq!(vd_trajectory_times(traj, times.as_mut_ptr(), len), VdStatus::Ok);
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 50.0);
        assert!(times.windows(2).all(|w| w[0] < w[1]), "times not increasing");

        let mut states = vec![0.0; len * dim];
        assert_eq!(
            vd_trajectory_states(traj, states.as_mut_ptr(), states.len()),
            VdStatus::Ok
        );
        assert_eq!(&states[..4], &y0, "first row must be the initial state");

        let mut last = [0.0; 4];
        assert_eq!(vd_trajectory_final_state(traj, last.as_mut_ptr(), 4), VdStatus::Ok);
        assert_eq!(&states[(len - 1) * dim..], &last);
        assert!(last.iter().all(|v| v.is_finite() && *v >= 0.0));

        // The JSON view round-trips into the library's own trajectory type.
        let mut json = ptr::null_mut();
        assert_eq!(vd_trajectory_json(traj, &mut json), VdStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap();
        let parsed: virodyn::integrator::Trajectory = serde_json::from_str(text).unwrap();
        vd_string_free(json);
        assert_eq!(parsed.times.len(), len);
        assert_eq!(parsed.states[len - 1], last.to_vec());

        let mut lm = ptr::null_mut();
        assert_eq!(vd_landmarks_json(traj, &mut lm), VdStatus::Ok);
        let lm = take_json(lm);
        assert!(!lm["landmarks"].as_array().unwrap().is_empty());
        assert_eq!(lm["degenerate"], false);

        vd_trajectory_free(traj);
        vd_model_free(model);
    }
}

#[test]
fn report_payloads_have_expected_shape() {
    unsafe {
        // Seropositive regime of the Nowak-May model.
        let nm = new_model("nowak-may", Some(r#"{"xi_nm": 1.0}"#));
        let mut fps = ptr::null_mut();
        assert_eq!(vd_fixed_points_json(nm, true, &mut fps), VdStatus::Ok);
        let fps = take_json(fps);
        let fps = fps.as_array().unwrap();
        assert_eq!(fps.len(), 2);
        assert_eq!(fps[0]["kind"], "health");
        assert_eq!(fps[0]["stability"], "unstable");
        assert_eq!(fps[1]["kind"], "seropositive");
        assert_eq!(fps[1]["stability"], "stable");
        assert!(fps[1]["eigenvalues"].as_array().unwrap().len() == 3);

        let mut derived = ptr::null_mut();
        assert_eq!(vd_derived_json(nm, &mut derived), VdStatus::Ok);
        let derived = take_json(derived);
        assert_eq!(derived["model"], "nowak-may");
        let r0 = derived["r0"].as_f64().unwrap();
        assert!((r0 - 250.0 * 0.0125 / 0.7).abs() < 1e-12);
        assert!(derived["seropositive_state"].is_object() || derived["seropositive_state"].is_array());
        vd_model_free(nm);

        // Derived scalars of the antigenicity-structured model.
        let dlr = new_model("dlr", None);
        let mut derived = ptr::null_mut();
        assert_eq!(vd_derived_json(dlr, &mut derived), VdStatus::Ok);
        let derived = take_json(derived);
        assert_eq!(derived["model"], "dlr");
        assert_eq!(derived["eta"].as_f64().unwrap(), 1.8);
        assert_eq!(derived["rho"].as_f64().unwrap(), 0.28);
        assert_eq!(derived["seropositive_states"].as_array().unwrap().len(), 1);

        let mut describe = ptr::null_mut();
        assert_eq!(vd_model_describe_json(dlr, &mut describe), VdStatus::Ok);
        let describe = take_json(describe);
        assert_eq!(describe["model"], "dlr");
        assert_eq!(describe["dim"], 4);
        assert_eq!(describe["components"], serde_json::json!(["T", "U", "V", "W"]));
        assert_eq!(describe["params"]["tau"].as_f64().unwrap(), 10.0);
        vd_model_free(dlr);
    }
}

#[test]
fn verify_reports_pass_on_default_run() {
    unsafe {
        let model = new_model("dlr", None);
        let mut options = vd_integrator_defaults();
        options.t_end = 50.0;
        let y0 = [1.0, 0.0, 0.05, 0.05];
        let mut traj = ptr::null_mut();
        assert_eq!(
            vd_simulate(model, y0.as_ptr(), 4, &options, &mut traj),
            VdStatus::Ok
        );
        let mut reports = ptr::null_mut();
        assert_eq!(vd_verify_json(model, traj, &mut reports), VdStatus::Ok);
        let reports = take_json(reports);
        let reports = reports.as_array().unwrap();
        let names: Vec<&str> = reports
            .iter()
            .map(|r| r["theorem"].as_str().unwrap())
            .collect();
        assert_eq!(names, ["positivity", "global-bound", "reduction-equivalence"]);
        assert!(reports.iter().all(|r| r["pass"] == true), "{reports:?}");
        vd_trajectory_free(traj);
        vd_model_free(model);
    }
}

#[test]
fn failures_return_typed_statuses_and_messages() {
    unsafe {
        // Unknown model id.
        let mut model = ptr::null_mut();
        let id = cstr("nowak");
        assert_eq!(
            vd_model_new(id.as_ptr(), ptr::null(), &mut model),
            VdStatus::InvalidArgument
        );
        assert!(model.is_null());
        assert!(last_error().contains("unknown model id"), "{}", last_error());

        // NULL pointers.
        assert_eq!(
            vd_model_new(id.as_ptr(), ptr::null(), ptr::null_mut()),
            VdStatus::NullArgument
        );
        assert_eq!(
            vd_model_new(ptr::null(), ptr::null(), &mut model),
            VdStatus::NullArgument
        );

        // Bad UTF-8 in an argument.
        let bad = [0xffu8, 0x00];
        assert_eq!(
            vd_model_new(bad.as_ptr() as *const c_char, ptr::null(), &mut model),
            VdStatus::InvalidUtf8
        );

        // Typo in a parameter name.
        let nm = cstr("nowak-may");
        let params = cstr(r#"{"beta_nm": 1.0}"#);
        assert_eq!(
            vd_model_new(nm.as_ptr(), params.as_ptr(), &mut model),
            VdStatus::InvalidArgument
        );
        assert!(last_error().contains("unknown field"), "{}", last_error());

        // Parameter value outside its domain.
        let params = cstr(r#"{"beta": -1.0}"#);
        assert_eq!(
            vd_model_new(nm.as_ptr(), params.as_ptr(), &mut model),
            VdStatus::InvalidArgument
        );
        assert!(last_error().contains("beta"), "{}", last_error());

        let model = new_model("nowak-may", None);

        // Wrong state dimension.
        let y0 = [1.0, 0.0];
        let mut traj = ptr::null_mut();
        assert_eq!(
            vd_simulate(model, y0.as_ptr(), 2, ptr::null(), &mut traj),
            VdStatus::InvalidArgument
        );
        assert!(last_error().contains("components"), "{}", last_error());

        // Inadmissible start.
        let y0 = [1.0, -0.5, 0.05];
        assert_eq!(
            vd_simulate(model, y0.as_ptr(), 3, ptr::null(), &mut traj),
            VdStatus::InvalidArgument
        );

        // Invalid solver settings.
        let mut options = vd_integrator_defaults();
        options.dt = 0.0;
        let y0 = [1.0, 0.0, 0.05];
        assert_eq!(
            vd_simulate(model, y0.as_ptr(), 3, &options, &mut traj),
            VdStatus::InvalidArgument
        );

        // Undersized output buffer.
        let mut options = vd_integrator_defaults();
        options.t_end = 5.0;
        assert_eq!(
            vd_simulate(model, y0.as_ptr(), 3, &options, &mut traj),
            VdStatus::Ok
        );
        let mut one = [0.0];
        assert_eq!(
            vd_trajectory_times(traj, one.as_mut_ptr(), 1),
            VdStatus::BufferTooSmall
        );
        assert!(last_error().contains("capacity 1"), "{}", last_error());

        // Trajectory from one model checked against another.
        let dlr = new_model("dlr", None);
        let mut reports = ptr::null_mut();
        assert_eq!(
            vd_verify_json(dlr, traj, &mut reports),
            VdStatus::InvalidArgument
        );
        assert!(last_error().contains("layout"), "{}", last_error());
        vd_trajectory_free(traj);

        // Equilibrium enumeration is a single-strain operation.
        let ms = new_model("multi-strain", None);
        let mut fps = ptr::null_mut();
        assert_eq!(
            vd_fixed_points_json(ms, false, &mut fps),
            VdStatus::InvalidArgument
        );
        assert!(last_error().contains("single-strain"), "{}", last_error());
        assert_eq!(
            vd_derived_json(ms, &mut fps),
            VdStatus::InvalidArgument
        );

        vd_model_free(ms);
        vd_model_free(dlr);
        vd_model_free(model);

        // NULL handles are inert.
        assert_eq!(vd_model_dim(ptr::null()), 0);
        assert_eq!(vd_trajectory_len(ptr::null()), 0);
        assert_eq!(vd_trajectory_dim(ptr::null()), 0);
        vd_model_free(ptr::null_mut());
        vd_trajectory_free(ptr::null_mut());
        vd_string_free(ptr::null_mut());
    }
}

#[test]
fn version_and_defaults_match_the_library() {
    unsafe {
        let v = CStr::from_ptr(vd_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
    let d = vd_integrator_defaults();
    let lib = virodyn::integrator::IntegratorConfig::default();
    assert_eq!(d.method, VdMethod::Rk45Adaptive);
    assert_eq!(d.dt, lib.dt);
    assert_eq!(d.rel_tol, lib.rel_tol);
    assert_eq!(d.abs_tol, lib.abs_tol);
    assert_eq!(d.t_end, lib.t_end);
    assert_eq!(d.positivity_guard, lib.positivity_guard);
}
