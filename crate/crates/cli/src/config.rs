//! Scenario configuration files.
//!
//! A scenario is one JSON document:
//!
//! ```json
//! {
//!   "lattice": {"kind": "path", "n": 8},
//!   "f": {"profile": "power", "p": 2},
//!   "model": {"model": "tfim", "J": 1, "h": 1},
//!   "observables": {"A": {"site": 0, "pauli": "z"}, "B": {"site": 7, "pauli": "z"}},
//!   "state": "up",
//!   "a": [0, 0.5, 1],
//!   "times": {"start": 0, "stop": 3, "points": 50},
//!   "seed": 0
//! }
//! ```
//!
//! Only `lattice` and `model` are required. Parsing applies the defaults
//! `f = (1+r)^-(d+1)`, `a = [0, 0.5, 1]` and `seed = 0`, so a parsed config
//! serializes to a document that parses back to itself.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lightcone::dynamics::{LocalObservable, ProductState, SiteState};
use lightcone::interaction::{Interaction, TermRecord};
use lightcone::lattice::{FFunction, MetricLattice, Profile};
use lightcone::linalg::{kron, CMatrix, Pauli};
use lightcone::space::{Support, DEFAULT_MAX_DIM};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeSpec {
    Path { n: usize },
    Ring { n: usize },
    Grid { dims: Vec<usize> },
}

impl LatticeSpec {
    pub fn build(&self) -> lightcone::Result<MetricLattice> {
        match self {
            LatticeSpec::Path { n } => MetricLattice::path(*n),
            LatticeSpec::Ring { n } => MetricLattice::ring(*n),
            LatticeSpec::Grid { dims } => MetricLattice::grid(dims),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Tfim {
        #[serde(rename = "J")]
        j: f64,
        h: f64,
    },
    Heisenberg {
        #[serde(rename = "J")]
        j: f64,
    },
    /// Inline term records, or a file of them relative to the config.
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<Vec<TermRecord>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PauliList {
    One(Pauli),
    Many(Vec<Pauli>),
}

/// A Pauli string: `{"site": 3, "pauli": "z"}` or
/// `{"sites": [3, 4], "pauli": ["x", "x"]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<usize>>,
    pub pauli: PauliList,
}

impl ObservableSpec {
    pub fn sites(&self) -> Vec<usize> {
        match (&self.site, &self.sites) {
            (Some(s), _) => vec![*s],
            (None, Some(v)) => v.clone(),
            (None, None) => Vec::new(),
        }
    }

    fn validate(&self, path: &str, n: usize) -> Result<(), ConfigError> {
        if self.site.is_some() == self.sites.is_some() {
            return Err(invalid(path, "exactly one of \"site\" or \"sites\" is required"));
        }
        let field = if self.site.is_some() { "site" } else { "sites" };
        let sites = self.sites();
        if sites.is_empty() {
            return Err(invalid(format!("{path}.sites"), "must not be empty"));
        }
        for (k, &v) in sites.iter().enumerate() {
            if v >= n {
                let at = if self.site.is_some() { format!("{path}.site") } else { format!("{path}.sites[{k}]") };
                return Err(invalid(at, format!("site {v} is not on the lattice; valid ids are 0..={}", n - 1)));
            }
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(invalid(format!("{path}.{field}"), "sites must be distinct"));
        }
        let count = match &self.pauli {
            PauliList::One(_) => 1,
            PauliList::Many(v) => v.len(),
        };
        if count != sites.len() {
            return Err(invalid(format!("{path}.pauli"), format!("{count} Pauli factors for {} sites", sites.len())));
        }
        Ok(())
    }

    pub fn build(&self) -> LocalObservable {
        let paulis = match &self.pauli {
            PauliList::One(p) => vec![*p],
            PauliList::Many(v) => v.clone(),
        };
        let mut factors: Vec<(usize, Pauli)> = self.sites().into_iter().zip(paulis).collect();
        factors.sort_by_key(|f| f.0);
        let matrix = factors
            .iter()
            .map(|(_, p)| p.matrix())
            .reduce(|acc, m| kron(acc.as_ref(), m.as_ref()))
            .unwrap_or_else(|| CMatrix::identity(1, 1));
        let support: Vec<usize> = factors.iter().map(|f| f.0).collect();
        LocalObservable::qubits(support, matrix).expect("Pauli strings are Hermitian")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observables {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ObservableSpec>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<ObservableSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    Up,
    Down,
    Mixed,
}

impl From<SiteKind> for SiteState {
    fn from(k: SiteKind) -> Self {
        match k {
            SiteKind::Up => SiteState::Up,
            SiteKind::Down => SiteState::Down,
            SiteKind::Mixed => SiteState::MaximallyMixed,
        }
    }
}

/// `"up"` for a uniform product state, or one entry per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Uniform(SiteKind),
    PerSite(Vec<SiteKind>),
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::Uniform(SiteKind::Up)
    }
}

impl StateSpec {
    pub fn build(&self, n: usize) -> ProductState {
        let sites: Vec<SiteState> = match self {
            StateSpec::Uniform(k) => vec![(*k).into(); n],
            StateSpec::PerSite(v) => v.iter().map(|&k| k.into()).collect(),
        };
        ProductState::from_sites(&sites).expect("preset site states are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                &n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the subcommand name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

fn default_tilts() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lattice: LatticeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Profile>,
    pub model: ModelSpec,
    #[serde(default)]
    pub observables: Observables,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default = "default_tilts")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<TimeGrid>,
    /// Nested volumes for convergence runs, innermost first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub volumes: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    /// Hilbert dimension cap for dense evolution.
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

/// Parses and validates a scenario, resolving custom model files against
/// `base_dir`.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config_in(text, None)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_in(&text, path.parent())
}

fn parse_config_in(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { path } else { format!(".{path}") };
        invalid(path, e.into_inner().to_string())
    })?;
    if let (ModelSpec::Custom { file: Some(f), .. }, Some(base)) = (&mut cfg.model, base_dir) {
        if f.is_relative() {
            *f = base.join(&*f);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn lattice(&self) -> MetricLattice {
        self.lattice.build().expect("validated lattice")
    }

    pub fn profile(&self) -> FFunction {
        FFunction::new(self.f.expect("defaults applied"), 0.0).expect("validated profile")
    }

    pub fn interaction(&self) -> Result<Interaction, ConfigError> {
        let lattice = self.lattice();
        let phi = match &self.model {
            ModelSpec::Tfim { j, h } => Interaction::tfim(&lattice, *j, *h),
            ModelSpec::Heisenberg { j } => Interaction::heisenberg(&lattice, *j),
            ModelSpec::Custom { terms, file } => {
                let records = match (terms, file) {
                    (Some(t), None) => t.clone(),
                    (None, Some(f)) => {
                        let text =
                            std::fs::read_to_string(f).map_err(|source| ConfigError::Io { path: f.clone(), source })?;
                        serde_json::from_str(&text)
                            .map_err(|e| invalid(".model.file", format!("{}: {e}", f.display())))?
                    }
                    _ => return Err(invalid(".model", "custom models need exactly one of \"terms\" or \"file\"")),
                };
                Interaction::from_records(vec![2; lattice.len()], &records)
                    .map_err(|e| invalid(".model.terms", e.to_string()))?
            }
        };
        Ok(phi.with_max_dim(self.max_dim))
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.as_ref().map(TimeGrid::points).unwrap_or_default()
    }

    pub fn observable_a(&self) -> Result<LocalObservable, ConfigError> {
        self.observables
            .a
            .as_ref()
            .map(ObservableSpec::build)
            .ok_or_else(|| invalid(".observables.A", "required by this subcommand"))
    }

    pub fn observable_b(&self) -> Result<LocalObservable, ConfigError> {
        self.observables
            .b
            .as_ref()
            .map(ObservableSpec::build)
            .ok_or_else(|| invalid(".observables.B", "required by this subcommand"))
    }

    pub fn require_times(&self) -> Result<Vec<f64>, ConfigError> {
        let t = self.times();
        if t.is_empty() {
            return Err(invalid(".times", "required by this subcommand"));
        }
        Ok(t)
    }

    fn validate(&mut self) -> Result<(), ConfigError> {
        let lattice = self.lattice.build().map_err(|e| invalid(".lattice", e.to_string()))?;
        let n = lattice.len();
        let profile = *self.f.get_or_insert(Profile::Power { p: lattice.dimension() as f64 + 1.0 });
        FFunction::new(profile, 0.0).map_err(|e| invalid(".f", e.to_string()))?;

        if let ModelSpec::Tfim { j, h } = self.model {
            if !(j.is_finite() && h.is_finite()) {
                return Err(invalid(".model", "couplings must be finite"));
            }
        }
        if let ModelSpec::Heisenberg { j } = self.model {
            if !j.is_finite() {
                return Err(invalid(".model.J", "coupling must be finite"));
            }
        }
        if let ModelSpec::Custom { file: None, terms: Some(terms) } = &self.model {
            for (k, t) in terms.iter().enumerate() {
                if let Some(&v) = t.support.iter().find(|&&v| v >= n) {
                    return Err(invalid(
                        format!(".model.terms[{k}].support"),
                        format!("site {v} is not on the lattice; valid ids are 0..={}", n - 1),
                    ));
                }
            }
        }

        if let Some(a) = &self.observables.a {
            a.validate(".observables.A", n)?;
        }
        if let Some(b) = &self.observables.b {
            b.validate(".observables.B", n)?;
        }
        if let StateSpec::PerSite(v) = &self.state {
            if v.len() != n {
                return Err(invalid(".state", format!("{} site states for {n} sites", v.len())));
            }
        }
        for (k, &a) in self.a.iter().enumerate() {
            if !(a.is_finite() && a >= 0.0) {
                return Err(invalid(format!(".a[{k}]"), format!("tilt must be finite and nonnegative, got {a}")));
            }
        }
        if let Some(TimeGrid::Range { start, stop, points }) = &self.times {
            if *points > 1 && stop.partial_cmp(start) != Some(Ordering::Greater) {
                return Err(invalid(".times", "stop must exceed start"));
            }
        }
        let times = self.times();
        for (k, t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(invalid(format!(".times[{k}]"), "must be finite"));
            }
            if k > 0 && times[k].partial_cmp(&times[k - 1]) != Some(Ordering::Greater) {
                return Err(invalid(format!(".times[{k}]"), "time grid must be strictly increasing"));
            }
        }
        for (k, &e) in self.epsilons.iter().enumerate() {
            if !(e.is_finite() && e >= 0.0) {
                return Err(invalid(format!(".epsilons[{k}]"), format!("must be finite and nonnegative, got {e}")));
            }
        }
        for (k, vol) in self.volumes.iter().enumerate() {
            if let Some(&v) = vol.iter().find(|&&v| v >= n) {
                return Err(invalid(
                    format!(".volumes[{k}]"),
                    format!("site {v} is not on the lattice; valid ids are 0..={}", n - 1),
                ));
            }
            if k > 0 && !Support::new(self.volumes[k - 1].clone()).is_subset(&Support::new(vol.clone())) {
                return Err(invalid(format!(".volumes[{k}]"), "volumes must be nested, innermost first"));
            }
        }
        let dim_ok = |sites: usize| 2usize.checked_pow(sites as u32).is_some_and(|d| d <= self.max_dim);
        if let Some(big) = self.volumes.iter().map(Vec::len).max() {
            if !dim_ok(big) {
                return Err(invalid(
                    ".volumes",
                    format!("a volume of {big} qubits exceeds the dimension cap {}", self.max_dim),
                ));
            }
        }
        Ok(())
    }
}
