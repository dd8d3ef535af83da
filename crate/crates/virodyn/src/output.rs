//! Deterministic tabular and JSON emission.
//!
//! CSV trajectories are the plotting interface: header row mandatory, one
//! `t` column plus one column per compartment, 17 significant digits, LF
//! line endings. JSON mirrors the in-memory records byte-for-byte across
//! runs, so identical inputs give identical files.

use crate::integrator::{LandmarkReport, Trajectory};
use serde::Serialize;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Output encoding for tabular artifacts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`, expected csv or json")),
        }
    }
}

/// Number rendering shared by all CSV emitters: 17 significant digits keeps
/// the round trip exact for every f64.
fn push_num(buf: &mut String, v: f64) {
    let _ = write!(buf, "{v:.16e}");
}

/// Renders a trajectory as CSV: `t,T,U,V,W` (or block-ordered per-strain
/// columns such as `t,T_0,T_1,U_0,U_1,...`).
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let names = traj.layout.component_names();
    let mut buf = String::with_capacity(32 * traj.times.len() * (names.len() + 1));
    buf.push('t');
    for name in &names {
        buf.push(',');
        buf.push_str(name);
    }
    buf.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        push_num(&mut buf, *t);
        for v in &traj.states[k] {
            buf.push(',');
            push_num(&mut buf, *v);
        }
        buf.push('\n');
    }
    buf
}

/// Renders a landmark report as CSV: one row per landmark.
pub fn landmarks_csv(report: &LandmarkReport) -> String {
    let mut buf = String::from("component,kind,scope,value,time\n");
    for l in &report.landmarks {
        let kind = match l.kind {
            crate::integrator::Extremum::Min => "min",
            crate::integrator::Extremum::Max => "max",
        };
        let scope = if l.global { "global" } else { "local" };
        let _ = write!(buf, "{},{},{},", l.component, kind, scope);
        push_num(&mut buf, l.value);
        buf.push(',');
        push_num(&mut buf, l.time);
        buf.push('\n');
    }
    if report.degenerate {
        buf.push_str("# constant trajectory: extrema are not meaningful\n");
    }
    buf
}

/// Pretty JSON with a trailing newline; the stable encoding for every
/// structured report.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize infallibly");
    s.push('\n');
    s
}

/// Renders a trajectory in the requested format.
pub fn trajectory_string(traj: &Trajectory, format: Format) -> String {
    match format {
        Format::Csv => trajectory_csv(traj),
        Format::Json => to_json_string(traj),
    }
}

/// Renders landmarks in the requested format.
pub fn landmarks_string(report: &LandmarkReport, format: Format) -> String {
    match format {
        Format::Csv => landmarks_csv(report),
        Format::Json => to_json_string(report),
    }
}

/// Writes `content` to `path`, mentioning the path in any error.
pub fn write_file(path: &Path, content: &str) -> io::Result<()> {
    std::fs::write(path, content).map_err(|e| {
        io::Error::new(e.kind(), format!("writing {}: {e}", path.display()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegratorConfig, Method};
    use crate::model::{DlrParams, Model, MultiStrainParams, StateLayout, StateVector};

    fn short_run() -> Trajectory {
        let model = Model::Dlr(DlrParams::default());
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 0.5,
            t_end: 1.0,
            ..IntegratorConfig::default()
        };
        integrate(&model, &StateVector::tuvw(1.0, 0.0, 0.0, 0.0), &cfg).unwrap()
    }

    #[test]
    fn csv_shape_and_header() {
        let csv = trajectory_csv(&short_run());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4); // header + 3 states
        assert_eq!(lines[0], "t,T,U,V,W");
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
        assert!(!csv.contains('\r'));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn csv_numbers_round_trip_exactly() {
        let traj = short_run();
        let csv = trajectory_csv(&traj);
        for (k, line) in csv.lines().skip(1).enumerate() {
            let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
            assert_eq!(fields[0], traj.times[k]);
            assert_eq!(&fields[1..], traj.states[k].as_slice());
        }
    }

    #[test]
    fn multistrain_header_interleaves_by_block() {
        let p = MultiStrainParams::uniform_strains(&DlrParams::default(), 2);
        let model = Model::MultiStrain(p);
        let start = StateVector::new(
            StateLayout::PerStrain { n: 2 },
            vec![0.5, 0.5, 0.0, 0.0, 0.02, 0.02, 0.0, 0.0],
        )
        .unwrap();
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: 1.0,
            t_end: 1.0,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&model, &start, &cfg).unwrap();
        let csv = trajectory_csv(&traj);
        assert!(csv.starts_with("t,T_0,T_1,U_0,U_1,V_0,V_1,W_0,W_1\n"));
    }

    #[test]
    fn emission_is_deterministic() {
        let a = trajectory_csv(&short_run());
        let b = trajectory_csv(&short_run());
        assert_eq!(a, b);
        let ja = to_json_string(&short_run());
        let jb = to_json_string(&short_run());
        assert_eq!(ja, jb);
    }

    #[test]
    fn trajectory_json_round_trips() {
        let traj = short_run();
        let json = to_json_string(&traj);
        let back: Trajectory = serde_json::from_str(&json).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn landmark_csv_lists_rows() {
        let model = Model::Dlr(DlrParams::default());
        let traj = integrate(
            &model,
            &StateVector::tuvw(1.0, 0.0, 0.05, 0.05),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let report = crate::integrator::detect_landmarks(&traj);
        let csv = landmarks_csv(&report);
        assert!(csv.starts_with("component,kind,scope,value,time\n"));
        assert!(csv.contains("T,min,global,"));
        assert!(csv.lines().count() > 4);
    }
}
