//! Declarative scenario files: a model id, parameter overrides, an initial
//! state, integrator settings, and the list of requested outputs.
//!
//! Scenarios are JSON. Parameter overrides are validated name-by-name
//! against the model's parameter set, so a typo fails loudly instead of
//! silently running defaults. A set of ready-made scenario files is compiled
//! into the library; `VIRODYN_SCENARIO_DIR` redirects lookups to a
//! directory of the user's own files before the bundled set is consulted.

use crate::error::ModelError;
use crate::integrator::IntegratorConfig;
use crate::model::{
    DlrParams, Model, MultiStrainParams, NowakMayParams, PerelsonParams, SnedecorParams,
    StateVector,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// What a scenario asks the runner to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    Trajectory,
    Landmarks,
    FixedPoints,
    Stability,
    Derived,
    Verify,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Trajectory, OutputKind::Landmarks]
}

/// One simulation setup, as read from a scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Model id: nowak-may, snedecor, perelson, dlr, or multi-strain.
    pub model: String,
    /// Overrides applied to the model's default parameters; unknown names
    /// are rejected.
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Initial compartment values in the model's layout order.
    pub initial_state: Vec<f64>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    #[serde(default)]
    pub description: Option<String>,
}

/// Problems loading or interpreting a scenario file.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parsing {context}: {source}")]
    Parse {
        context: String,
        source: serde_json::Error,
    },

    #[error("unknown model id `{0}` (expected nowak-may, snedecor, perelson, dlr, or multi-strain)")]
    UnknownModel(String),

    #[error("model `{model}` has no parameter named `{name}`")]
    UnknownParameter { model: String, name: String },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("initial state is not admissible: {0}")]
    BadInitialState(String),

    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("no scenario named `{0}` (not a file, not in VIRODYN_SCENARIO_DIR, not bundled)")]
    NotFound(String),
}

impl Scenario {
    /// Parses a scenario from JSON text; `context` names the source for
    /// diagnostics.
    pub fn from_json(text: &str, context: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|source| ScenarioError::Parse {
            context: context.to_string(),
            source,
        })
    }

    /// Reads a scenario from a file.
    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Builds the validated model: defaults overlaid with this scenario's
    /// parameter overrides.
    pub fn build_model(&self) -> Result<Model, ScenarioError> {
        let model = match self.model.as_str() {
            "nowak-may" => Model::NowakMay(self.overlay(NowakMayParams::default())?),
            "snedecor" => Model::Snedecor(self.overlay(SnedecorParams::default())?),
            "perelson" => Model::Perelson(self.overlay(PerelsonParams::default())?),
            "dlr" => Model::Dlr(self.overlay(DlrParams::default())?),
            "multi-strain" => Model::MultiStrain(self.overlay(MultiStrainParams::default())?),
            other => return Err(ScenarioError::UnknownModel(other.to_string())),
        };
        model.validate()?;
        Ok(model)
    }

    fn overlay<P>(&self, base: P) -> Result<P, ScenarioError>
    where
        P: Serialize + DeserializeOwned,
    {
        let mut doc = match serde_json::to_value(&base) {
            Ok(Value::Object(map)) => map,
            _ => unreachable!("parameter structs serialize to objects"),
        };
        for (key, value) in &self.params {
            if !doc.contains_key(key) {
                return Err(ScenarioError::UnknownParameter {
                    model: self.model.clone(),
                    name: key.clone(),
                });
            }
            doc.insert(key.clone(), value.clone());
        }
        serde_json::from_value(Value::Object(doc)).map_err(|source| ScenarioError::Parse {
            context: format!("parameters of scenario `{}`", self.name),
            source,
        })
    }

    /// Initial state in the model's layout, admissibility-checked.
    pub fn initial_state(&self, model: &Model) -> Result<StateVector, ScenarioError> {
        let state = StateVector::new(model.layout(), self.initial_state.clone())?;
        if !state.is_admissible(1e-9) {
            return Err(ScenarioError::BadInitialState(format!(
                "components {:?} (T must be > 0, others >= -1e-9, all finite)",
                self.initial_state
            )));
        }
        Ok(state)
    }
}

/// Ready-made scenario files compiled into the library, (name, JSON text).
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "nowak-may-sante",
        include_str!("../../../scenarios/nowak-may-sante.json"),
    ),
    (
        "nowak-may-seropo",
        include_str!("../../../scenarios/nowak-may-seropo.json"),
    ),
    (
        "figSnedecor1",
        include_str!("../../../scenarios/figSnedecor1.json"),
    ),
    (
        "snedecor-sante",
        include_str!("../../../scenarios/snedecor-sante.json"),
    ),
    (
        "snedecor-seropo",
        include_str!("../../../scenarios/snedecor-seropo.json"),
    ),
    (
        "perelson-sante",
        include_str!("../../../scenarios/perelson-sante.json"),
    ),
    (
        "perelson-seropo",
        include_str!("../../../scenarios/perelson-seropo.json"),
    ),
    ("dlr-seropo", include_str!("../../../scenarios/dlr-seropo.json")),
    (
        "dlr-sante-mars08",
        include_str!("../../../scenarios/dlr-sante-mars08.json"),
    ),
    (
        "dlr-seropo01",
        include_str!("../../../scenarios/dlr-seropo01.json"),
    ),
    (
        "dlr-t6z6-seropo2",
        include_str!("../../../scenarios/dlr-t6z6-seropo2.json"),
    ),
    ("dlr-tau6", include_str!("../../../scenarios/dlr-tau6.json")),
    ("dlr-sante", include_str!("../../../scenarios/dlr-sante.json")),
];

/// Names of all bundled scenarios, in registry order.
pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(name, _)| *name).collect()
}

/// Loads a scenario by file path, by name under `VIRODYN_SCENARIO_DIR`, or
/// by bundled name, in that precedence order.
pub fn load(name_or_path: &str) -> Result<Scenario, ScenarioError> {
    let as_path = Path::new(name_or_path);
    if as_path.is_file() {
        return Scenario::from_file(as_path);
    }
    if let Ok(dir) = std::env::var("VIRODYN_SCENARIO_DIR") {
        let candidate = Path::new(&dir).join(format!("{name_or_path}.json"));
        if candidate.is_file() {
            return Scenario::from_file(&candidate);
        }
    }
    if let Some((name, text)) = BUNDLED.iter().find(|(name, _)| *name == name_or_path) {
        return Scenario::from_json(text, &format!("bundled scenario `{name}`"));
    }
    Err(ScenarioError::NotFound(name_or_path.to_string()))
}
