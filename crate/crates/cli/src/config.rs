//! JSON experiment configuration: schema, validation, and model building.
//!
//! Validation is collected, not short-circuited: a bad config reports every
//! violation in one pass. Construction errors from the library (graph
//! connectivity, generator checks) are also surfaced as validation errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use episwitch::dynamics::{Model, NoiseKind, RegimeSpec};
use episwitch::graph::Graph;
use episwitch::switching::RateMatrix;

/// Relative slack when checking that the horizon is a whole number of steps.
const GRID_REL_TOL: f64 = 1e-9;

/// Errors from loading or validating a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  - {}", errors.join("\n  - "))]
    Invalid { errors: Vec<String> },
}

/// Top-level experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// The switched model: one entry per chain state plus the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub states: Vec<StateConfig>,
    /// Full `m x m` transition-rate matrix (zero row sums, nonnegative
    /// off-diagonal).
    pub q: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise_kind: NoiseKindConfig,
}

/// Per-state parameters and contact graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub beta: f64,
    pub delta: f64,
    /// Noise bound `M(s)`.
    pub noise: f64,
    pub graph: GraphSpec,
}

/// How the contact graph of a state is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Circulant d-regular graph on n nodes.
    Regular { n: usize, d: usize },
    /// Connected Erdos-Renyi sample G(n, p) with a fixed seed.
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    /// Edge list file (`n m` header then one `i j` pair per line,
    /// 0-based); relative paths resolve against the config file's
    /// directory.
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    /// Node count when it is known without I/O.
    fn known_n(&self) -> Option<usize> {
        match self {
            GraphSpec::Regular { n, .. } | GraphSpec::ErdosRenyi { n, .. } => Some(*n),
            GraphSpec::EdgeList { .. } => None,
        }
    }
}

/// Noise family selector (see the dynamics module).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindConfig {
    #[default]
    Linear,
    Saturating,
}

impl From<NoiseKindConfig> for NoiseKind {
    fn from(value: NoiseKindConfig) -> Self {
        match value {
            NoiseKindConfig::Linear => NoiseKind::Linear,
            NoiseKindConfig::Saturating => NoiseKind::Saturating,
        }
    }
}

/// Initial state: one value for all nodes, or an explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0 {
    Scalar(f64),
    Vector(Vec<f64>),
}

fn default_n_runs() -> usize {
    50
}

fn default_master_seed() -> u64 {
    1
}

/// Run block: initial conditions, grid, and ensemble size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub x0: X0,
    /// Initial chain state, 1-based.
    pub s0: usize,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_plot() -> bool {
    true
}

/// Output block: artifact directory and emission switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default)]
    pub dump_nodes: bool,
    #[serde(default = "default_plot")]
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            dump_nodes: false,
            plot: true,
        }
    }
}

/// Parses and validates a configuration from JSON text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let errors = config.validate();
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid { errors })
    }
}

/// Reads, parses, and validates the configuration file at `path`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

impl ExperimentConfig {
    /// Collects every schema violation (empty when the config is valid).
    #[must_use]
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let m = self.model.states.len();
        if m == 0 {
            errors.push("model.states must contain at least one state".to_string());
        }

        let mut shared_n: Option<usize> = None;
        for (i, state) in self.model.states.iter().enumerate() {
            let label = i + 1;
            if !(state.beta > 0.0 && state.beta.is_finite()) {
                errors.push(format!("state {label}: beta must be positive"));
            }
            if !(state.delta > 0.0 && state.delta.is_finite()) {
                errors.push(format!("state {label}: delta must be positive"));
            }
            if !(state.noise >= 0.0 && state.noise.is_finite()) {
                errors.push(format!(
                    "state {label}: noise must be nonnegative and finite"
                ));
            }
            match &state.graph {
                GraphSpec::Regular { n, d } => {
                    if *n < 2 {
                        errors.push(format!("state {label}: regular graph needs n >= 2"));
                    }
                    if *d < 1 {
                        errors.push(format!("state {label}: regular graph needs d >= 1"));
                    }
                }
                GraphSpec::ErdosRenyi { n, p, .. } => {
                    if *n < 2 {
                        errors.push(format!("state {label}: random graph needs n >= 2"));
                    }
                    if !(*p > 0.0 && *p <= 1.0) {
                        errors.push(format!(
                            "state {label}: edge probability must lie in (0, 1]"
                        ));
                    }
                }
                GraphSpec::EdgeList { path } => {
                    if path.as_os_str().is_empty() {
                        errors.push(format!("state {label}: edge list path must not be empty"));
                    }
                }
            }
            if let Some(n) = state.graph.known_n() {
                match shared_n {
                    None => shared_n = Some(n),
                    Some(prev) if prev != n => errors.push(format!(
                        "state {label}: graph has {n} nodes but an earlier state has {prev}; \
                         all states must share one node count"
                    )),
                    Some(_) => {}
                }
            }
        }

        if self.model.q.len() != m {
            errors.push(format!(
                "q must have one row per state ({} rows for {m} states)",
                self.model.q.len()
            ));
        } else {
            for (w, row) in self.model.q.iter().enumerate() {
                if row.len() != m {
                    errors.push(format!("q row {} must have {m} entries", w + 1));
                }
            }
            if self.model.q.iter().all(|row| row.len() == m) && m > 0 {
                // Structural checks (signs, row sums, irreducibility) live in
                // the library; surface its message here so everything lands
                // in one validation pass.
                if let Err(e) = RateMatrix::new(&self.model.q) {
                    errors.push(format!("q: {e}"));
                }
            }
        }

        match &self.run.x0 {
            X0::Scalar(v) => {
                if !(*v > 0.0 && *v < 1.0) {
                    errors.push(format!("run.x0 = {v} must lie in (0, 1)"));
                }
            }
            X0::Vector(values) => {
                if values.is_empty() {
                    errors.push("run.x0 vector must not be empty".to_string());
                }
                for (i, v) in values.iter().enumerate() {
                    if !(*v > 0.0 && *v < 1.0) {
                        errors.push(format!("run.x0[{i}] = {v} must lie in (0, 1)"));
                    }
                }
                if let Some(n) = shared_n {
                    if !values.is_empty() && values.len() != n {
                        errors.push(format!(
                            "run.x0 vector has {} entries but the graphs have {n} nodes",
                            values.len()
                        ));
                    }
                }
            }
        }
        if self.run.s0 < 1 || self.run.s0 > m.max(1) {
            errors.push(format!(
                "run.s0 = {} must lie between 1 and {m}",
                self.run.s0
            ));
        }
        if !(self.run.horizon > 0.0 && self.run.horizon.is_finite()) {
            errors.push("run.horizon must be positive and finite".to_string());
        }
        if !(self.run.dt > 0.0 && self.run.dt.is_finite()) {
            errors.push("run.dt must be positive and finite".to_string());
        } else if self.run.horizon > 0.0 && self.run.horizon.is_finite() {
            let steps_f = self.run.horizon / self.run.dt;
            let steps = steps_f.round();
            if steps < 1.0 || (steps_f - steps).abs() > GRID_REL_TOL * steps {
                errors.push(format!(
                    "run.horizon = {} must be a whole number of dt = {} steps",
                    self.run.horizon, self.run.dt
                ));
            }
        }
        if self.run.n_runs < 1 {
            errors.push("run.n_runs must be at least 1".to_string());
        }
        errors
    }

    /// Serializes the config back to pretty JSON.
    #[must_use]
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        let _ = writeln!(text);
        text
    }

    /// Builds the model, resolving edge-list paths against `base_dir`.
    /// Library-level construction failures are reported as validation
    /// errors.
    pub fn build_model(&self, base_dir: &Path) -> Result<Model, ConfigError> {
        let invalid = |msg: String| ConfigError::Invalid { errors: vec![msg] };
        let mut regimes = Vec::with_capacity(self.model.states.len());
        for (i, state) in self.model.states.iter().enumerate() {
            let label = i + 1;
            let graph = match &state.graph {
                GraphSpec::Regular { n, d } => {
                    Graph::regular(*n, *d).map_err(|e| invalid(format!("state {label}: {e}")))?
                }
                GraphSpec::ErdosRenyi { n, p, seed } => Graph::erdos_renyi(*n, *p, *seed)
                    .map_err(|e| invalid(format!("state {label}: {e}")))?,
                GraphSpec::EdgeList { path } => {
                    let resolved = if path.is_absolute() {
                        path.clone()
                    } else {
                        base_dir.join(path)
                    };
                    Graph::read_edge_list(&resolved)
                        .map_err(|e| invalid(format!("state {label}: {e}")))?
                }
            };
            regimes.push(
                RegimeSpec::new(state.beta, state.delta, state.noise, graph)
                    .map_err(|e| invalid(format!("state {label}: {e}")))?,
            );
        }
        let q = RateMatrix::new(&self.model.q).map_err(|e| invalid(format!("q: {e}")))?;
        Model::new(regimes, q, self.model.noise_kind.into())
            .map_err(|e| invalid(format!("model: {e}")))
    }

    /// The initial vector, filling a scalar `x0` across all `n` nodes.
    #[must_use]
    pub fn x0_vector(&self, n: usize) -> Vec<f64> {
        match &self.run.x0 {
            X0::Scalar(v) => vec![*v; n],
            X0::Vector(values) => values.clone(),
        }
    }

    /// The initial chain state as a 0-based index.
    #[must_use]
    pub fn s0_index(&self) -> usize {
        self.run.s0 - 1
    }
}
