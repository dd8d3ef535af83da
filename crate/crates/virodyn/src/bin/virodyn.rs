//! Scenario-driven command line for the within-host dynamics toolkit.
//!
//! Exit codes: 0 on success, 2 when inputs fail validation (arguments,
//! scenario files, parameters), 3 when a numerical procedure fails or a
//! verified property is violated.

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use virodyn::analysis::{
    classify_stability, dlr_derived, fixed_points_dlr, fixed_points_nowak_may,
    fixed_points_perelson, fixed_points_snedecor, snedecor_discriminant, thresholds_snedecor,
    DlrDerived, FixedPointKind, FixedPointReport, SnedecorThresholds, Stability,
};
use virodyn::error::{AnalysisError, IntegrateError, ModelError};
use virodyn::integrator::{detect_landmarks, integrate, IntegratorConfig, Trajectory};
use virodyn::model::{Model, StateVector};
use virodyn::output::{self, Format};
use virodyn::scenario::{self, OutputKind, Scenario};
use virodyn::verification::{
    check_global_bound, check_macroscopic_laws, check_positivity, reduction_equivalence,
    TheoremReport, VerifyError,
};

#[derive(Parser)]
#[command(
    name = "virodyn",
    version,
    about = "Within-host viral dynamics: simulate scenarios, locate equilibria, verify invariants"
)]
struct Cli {
    /// Directory where `simulate` writes its output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Payload format for trajectories, landmarks, and sweep tables.
    /// Structured reports are always JSON.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Seed for the randomised trials run by `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Suppress progress notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the outputs it requests.
    Simulate {
        /// Scenario file path, name under VIRODYN_SCENARIO_DIR, or bundled name.
        scenario: String,
    },
    /// Print the model's fixed points as JSON.
    FixedPoints { scenario: String },
    /// Print fixed points with spectra and stability verdicts as JSON.
    Stability { scenario: String },
    /// Print derived quantities (reproduction numbers, thresholds) as JSON.
    Derived { scenario: String },
    /// Tabulate fixed points and derived quantities across a parameter range.
    Sweep {
        scenario: String,
        /// Parameter to vary, by its name in the scenario's model.
        #[arg(long)]
        param: String,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        /// Number of evenly spaced values, at least 2.
        #[arg(long)]
        count: usize,
    },
    /// Run the model's structural checks on the scenario's trajectory.
    Verify {
        scenario: String,
        /// Randomised admissible starts additionally checked for positivity.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// List the scenarios available by name.
    ListScenarios,
}

/// Error carrying the process exit code: 2 validation, 3 numerical.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<scenario::ScenarioError> for CliError {
    fn from(e: scenario::ScenarioError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<IntegrateError> for CliError {
    fn from(e: IntegrateError) -> Self {
        match e {
            // Model evaluation only fails after validation, i.e. mid-run.
            IntegrateError::StepUnderflow { .. } | IntegrateError::Model(_) => {
                CliError::numerical(e.to_string())
            }
            IntegrateError::InadmissibleStart(_) | IntegrateError::BadConfig(_) => {
                CliError::validation(e.to_string())
            }
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Model(_) | AnalysisError::Domain(_) => {
                CliError::validation(e.to_string())
            }
            AnalysisError::RootNotConverged { .. } | AnalysisError::EigenNotConverged { .. } => {
                CliError::numerical(e.to_string())
            }
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Integrate(inner) => inner.into(),
            VerifyError::Analysis(inner) => inner.into(),
            VerifyError::Model(_) | VerifyError::NonUniformGrid(_) | VerifyError::TooShort(_) => {
                CliError::validation(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { scenario } => cmd_simulate(cli, scenario),
        Command::FixedPoints { scenario } => cmd_fixed_points(scenario),
        Command::Stability { scenario } => cmd_stability(scenario),
        Command::Derived { scenario } => cmd_derived(scenario),
        Command::Sweep {
            scenario,
            param,
            start,
            stop,
            count,
        } => cmd_sweep(cli, scenario, param, *start, *stop, *count),
        Command::Verify { scenario, trials } => cmd_verify(cli, scenario, *trials),
        Command::ListScenarios => cmd_list_scenarios(),
    }
}

fn note(cli: &Cli, path: &Path) {
    if !cli.quiet {
        eprintln!("wrote {}", path.display());
    }
}

fn kind_slug(kind: OutputKind) -> &'static str {
    match kind {
        OutputKind::Trajectory => "trajectory",
        OutputKind::Landmarks => "landmarks",
        OutputKind::FixedPoints => "fixed-points",
        OutputKind::Stability => "stability",
        OutputKind::Derived => "derived",
        OutputKind::Verify => "verify",
    }
}

fn cmd_simulate(cli: &Cli, name: &str) -> Result<(), CliError> {
    let sc = scenario::load(name)?;
    let model = sc.build_model()?;
    let start = sc.initial_state(&model)?;
    let format = Format::from(cli.format);

    let needs_trajectory = sc.outputs.iter().any(|k| {
        matches!(
            k,
            OutputKind::Trajectory | OutputKind::Landmarks | OutputKind::Verify
        )
    });
    let traj = if needs_trajectory {
        Some(integrate(&model, &start, &sc.integrator)?)
    } else {
        None
    };

    std::fs::create_dir_all(&cli.out)?;
    let mut failed_theorems: Vec<String> = Vec::new();
    for &kind in &sc.outputs {
        let ext = match kind {
            OutputKind::Trajectory | OutputKind::Landmarks => format.extension(),
            _ => "json",
        };
        let path = cli.out.join(format!("{}.{}.{ext}", sc.name, kind_slug(kind)));
        let content = match kind {
            OutputKind::Trajectory => {
                output::trajectory_string(traj.as_ref().expect("integrated above"), format)
            }
            OutputKind::Landmarks => {
                let report = detect_landmarks(traj.as_ref().expect("integrated above"));
                output::landmarks_string(&report, format)
            }
            OutputKind::FixedPoints => output::to_json_string(&fixed_points_of(&model)?),
            OutputKind::Stability => output::to_json_string(&classified_fixed_points(&model)?),
            OutputKind::Derived => output::to_json_string(&derived_report(&model)?),
            OutputKind::Verify => {
                let reports =
                    verification_reports(&model, traj.as_ref().expect("integrated above"))?;
                for r in &reports {
                    if !r.pass {
                        failed_theorems.push(r.theorem.clone());
                    }
                }
                output::to_json_string(&reports)
            }
        };
        output::write_file(&path, &content)?;
        note(cli, &path);
    }

    if failed_theorems.is_empty() {
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "verification failed: {}",
            failed_theorems.join(", ")
        )))
    }
}

fn cmd_fixed_points(name: &str) -> Result<(), CliError> {
    let sc = scenario::load(name)?;
    let model = sc.build_model()?;
    print!("{}", output::to_json_string(&fixed_points_of(&model)?));
    Ok(())
}

fn cmd_stability(name: &str) -> Result<(), CliError> {
    let sc = scenario::load(name)?;
    let model = sc.build_model()?;
    print!(
        "{}",
        output::to_json_string(&classified_fixed_points(&model)?)
    );
    Ok(())
}

fn cmd_derived(name: &str) -> Result<(), CliError> {
    let sc = scenario::load(name)?;
    let model = sc.build_model()?;
    print!("{}", output::to_json_string(&derived_report(&model)?));
    Ok(())
}

fn cmd_list_scenarios() -> Result<(), CliError> {
    for (name, text) in scenario::BUNDLED {
        let sc = Scenario::from_json(text, name)?;
        println!(
            "{name}\t{}\t{}",
            sc.model,
            sc.description.unwrap_or_default()
        );
    }
    if let Ok(dir) = std::env::var("VIRODYN_SCENARIO_DIR") {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let sc = Scenario::from_file(&path)?;
            println!(
                "{}\t{}\t{}\t(VIRODYN_SCENARIO_DIR)",
                sc.name,
                sc.model,
                sc.description.unwrap_or_default()
            );
        }
    }
    Ok(())
}

/// Equilibria of a single-strain model, unclassified.
fn fixed_points_of(model: &Model) -> Result<Vec<FixedPointReport>, CliError> {
    let fps = match model {
        Model::NowakMay(p) => fixed_points_nowak_may(p)?,
        Model::Snedecor(p) => fixed_points_snedecor(p)?,
        Model::Perelson(p) => fixed_points_perelson(p)?,
        Model::Dlr(p) => fixed_points_dlr(p)?,
        Model::MultiStrain(_) => {
            return Err(CliError::validation(
                "fixed-point analysis needs a single-strain model \
                 (nowak-may, snedecor, perelson, dlr)",
            ))
        }
    };
    Ok(fps)
}

fn classified_fixed_points(model: &Model) -> Result<Vec<FixedPointReport>, CliError> {
    fixed_points_of(model)?
        .into_iter()
        .map(|fp| classify_stability(model, fp).map_err(CliError::from))
        .collect()
}

/// Compensated discriminant value with its rounding bound.
#[derive(Serialize)]
struct Discriminant {
    value: f64,
    rounding_bound: f64,
}

/// Model-specific derived quantities, tagged by model id.
#[derive(Serialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
enum DerivedReport {
    NowakMay {
        r0: f64,
        seropositive_state: Option<StateVector>,
    },
    Snedecor {
        thresholds: SnedecorThresholds,
        discriminant: Option<Discriminant>,
        seropositive_state: Option<StateVector>,
    },
    Perelson {
        r0: f64,
        seropositive_state: Option<StateVector>,
    },
    Dlr {
        #[serde(flatten)]
        derived: DlrDerived,
        seropositive_states: Vec<StateVector>,
    },
}

fn seropositive_states(fps: &[FixedPointReport]) -> Vec<StateVector> {
    fps.iter()
        .filter(|fp| fp.kind == FixedPointKind::Seropositive)
        .map(|fp| fp.state.clone())
        .collect()
}

fn derived_report(model: &Model) -> Result<DerivedReport, CliError> {
    let report = match model {
        Model::NowakMay(p) => DerivedReport::NowakMay {
            r0: p.a * p.gamma_nm / (p.alpha * p.xi_nm),
            seropositive_state: seropositive_states(&fixed_points_nowak_may(p)?).pop(),
        },
        Model::Snedecor(p) => DerivedReport::Snedecor {
            thresholds: thresholds_snedecor(p)?,
            discriminant: snedecor_discriminant(p).map(|(value, rounding_bound)| Discriminant {
                value,
                rounding_bound,
            }),
            seropositive_state: seropositive_states(&fixed_points_snedecor(p)?).pop(),
        },
        Model::Perelson(p) => DerivedReport::Perelson {
            r0: p.a * p.theta * p.delta_p / (p.alpha * p.sigma_p),
            seropositive_state: seropositive_states(&fixed_points_perelson(p)?).pop(),
        },
        Model::Dlr(p) => DerivedReport::Dlr {
            derived: dlr_derived(p)?,
            seropositive_states: seropositive_states(&fixed_points_dlr(p)?),
        },
        Model::MultiStrain(_) => {
            return Err(CliError::validation(
                "derived quantities are only defined for the single-strain models",
            ))
        }
    };
    Ok(report)
}

fn verdict(fp: &FixedPointReport) -> &'static str {
    match fp.stability {
        Some(Stability::Stable) => "stable",
        Some(Stability::Unstable) => "unstable",
        Some(Stability::Marginal) => "marginal",
        None => "unclassified",
    }
}

fn cmd_sweep(
    cli: &Cli,
    name: &str,
    param: &str,
    start: f64,
    stop: f64,
    count: usize,
) -> Result<(), CliError> {
    if count < 2 {
        return Err(CliError::validation(format!(
            "sweep needs --count >= 2, got {count}"
        )));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(CliError::validation("sweep bounds must be finite"));
    }
    let sc = scenario::load(name)?;
    let extra_names: &[&str] = match sc.model.as_str() {
        "nowak-may" | "perelson" => &["r0", "t_star", "v_star"],
        "snedecor" => &["t_star", "v_star", "discriminant"],
        "dlr" => &["eta", "rho", "v_bar", "gamma_bound"],
        _ => {
            return Err(CliError::validation(
                "sweep needs a single-strain model (nowak-may, snedecor, perelson, dlr)",
            ))
        }
    };

    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let value = start + (stop - start) * i as f64 / (count - 1) as f64;
        let mut varied = sc.clone();
        varied.params.insert(param.to_string(), json!(value));
        let model = varied.build_model()?;
        let classified = classified_fixed_points(&model)?;
        let stability: Vec<&'static str> = classified.iter().map(verdict).collect();
        let sero = seropositive_states(&classified);
        let extras: Vec<Option<f64>> = match &model {
            Model::NowakMay(p) => vec![
                Some(p.a * p.gamma_nm / (p.alpha * p.xi_nm)),
                sero.first().map(|s| s.values()[0]),
                sero.first().map(|s| s.values()[2]),
            ],
            Model::Perelson(p) => vec![
                Some(p.a * p.theta * p.delta_p / (p.alpha * p.sigma_p)),
                sero.first().map(|s| s.values()[0]),
                sero.first().map(|s| s.values()[2]),
            ],
            Model::Snedecor(p) => vec![
                sero.first().map(|s| s.values()[0]),
                sero.first().map(|s| s.values()[2]),
                snedecor_discriminant(p).map(|(d, _)| d),
            ],
            // The scalar regime markers, without the costly tangency
            // threshold; `derived` reports that one on demand.
            Model::Dlr(p) => {
                let eta = p.a * p.omega - p.alpha * p.zeta;
                let v_bar = (eta != 0.0).then(|| p.beta * p.a * p.theta / eta);
                vec![
                    Some(eta),
                    Some(p.alpha * p.zeta * p.tau / (p.a * p.theta)),
                    v_bar,
                    Some(eta.abs() / p.zeta),
                ]
            }
            Model::MultiStrain(_) => unreachable!("rejected above"),
        };
        rows.push(SweepRow {
            value,
            fixed_points: classified.len(),
            stability,
            extras,
        });
    }

    match Format::from(cli.format) {
        Format::Csv => print!("{}", sweep_csv(param, extra_names, &rows)),
        Format::Json => print!("{}", sweep_json(param, extra_names, &rows)),
    }
    Ok(())
}

struct SweepRow {
    value: f64,
    fixed_points: usize,
    stability: Vec<&'static str>,
    extras: Vec<Option<f64>>,
}

fn sweep_csv(param: &str, extra_names: &[&str], rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(param);
    out.push_str(",fixed_points,stability");
    for name in extra_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{:.16e}", row.value));
        out.push_str(&format!(",{}", row.fixed_points));
        out.push(',');
        out.push_str(&row.stability.join("/"));
        for extra in &row.extras {
            out.push(',');
            if let Some(v) = extra {
                out.push_str(&format!("{v:.16e}"));
            }
        }
        out.push('\n');
    }
    out
}

fn sweep_json(param: &str, extra_names: &[&str], rows: &[SweepRow]) -> String {
    let values: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            obj.insert(param.to_string(), json!(row.value));
            obj.insert("fixed_points".to_string(), json!(row.fixed_points));
            obj.insert("stability".to_string(), json!(row.stability));
            for (name, extra) in extra_names.iter().zip(&row.extras) {
                obj.insert(name.to_string(), json!(extra));
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    output::to_json_string(&values)
}

/// The checks that apply to this model, on an already computed trajectory.
fn verification_reports(
    model: &Model,
    traj: &Trajectory,
) -> Result<Vec<TheoremReport>, CliError> {
    let mut reports = vec![check_positivity(traj)];
    match model {
        Model::Dlr(p) => {
            reports.push(check_global_bound(traj, p)?);
            reports.push(reduction_equivalence(p)?);
        }
        Model::MultiStrain(p) => reports.push(check_macroscopic_laws(traj, p)?),
        _ => {}
    }
    Ok(reports)
}

fn cmd_verify(cli: &Cli, name: &str, trials: usize) -> Result<(), CliError> {
    let sc = scenario::load(name)?;
    let model = sc.build_model()?;
    let start = sc.initial_state(&model)?;
    let traj = integrate(&model, &start, &sc.integrator)?;

    let mut reports = verification_reports(&model, &traj)?;
    if trials > 0 {
        reports.push(random_start_positivity(
            &model,
            &sc.integrator,
            trials,
            cli.seed,
        )?);
    }
    print!("{}", output::to_json_string(&reports));

    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.theorem.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "verification failed: {}",
            failed.join(", ")
        )))
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Positivity check over randomised admissible starts, aggregated into one
/// report carrying the tightest slack seen.
fn random_start_positivity(
    model: &Model,
    cfg: &IntegratorConfig,
    trials: usize,
    seed: u64,
) -> Result<TheoremReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = model.layout();
    let t_range = model.health().t_indices();
    let mut failures = 0usize;
    let mut worst: Option<TheoremReport> = None;
    for _ in 0..trials {
        let values: Vec<f64> = (0..model.dim())
            .map(|i| {
                if t_range.contains(&i) {
                    log_uniform(&mut rng, 1e-2, 2.0)
                } else {
                    log_uniform(&mut rng, 1e-4, 10.0)
                }
            })
            .collect();
        let start = StateVector::new(layout, values).expect("dimension matches the model");
        let traj = integrate(model, &start, cfg)?;
        let report = check_positivity(&traj);
        if !report.pass {
            failures += 1;
        }
        if worst
            .as_ref()
            .map_or(true, |w| report.worst_margin < w.worst_margin)
        {
            worst = Some(report);
        }
    }
    let worst = worst.expect("trials > 0");
    Ok(TheoremReport {
        theorem: format!("positivity under {trials} random admissible starts"),
        pass: failures == 0,
        worst_margin: worst.worst_margin,
        worst_time: worst.worst_time,
        worst_component: worst.worst_component,
        details: format!(
            "{failures} of {trials} trials violated positivity (seed {seed}); \
             tightest trial: {}",
            worst.details
        ),
    })
}
