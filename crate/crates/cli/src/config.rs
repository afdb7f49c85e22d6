//! Experiment configuration: per-experiment defaults, a TOML file layer and
//! command-line overrides, then validation.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use qsaw_core::diagnostics::{Constants, InitialState, ModelKind};
use qsaw_core::imperfect::{ImperfectionModel, ImperfectionSpec, ImpuritySite};
use qsaw_core::MapParams;

use crate::error::CliError;

/// Largest register for experiments that build the dense Floquet matrix.
pub const MATRIX_MAX_QUBITS: usize = 12;
/// Largest register for state-vector-only fidelity runs.
pub const FIDELITY_MAX_QUBITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Spectrum,
    Husimi,
    Entropy,
    Threshold,
    Fidelity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Husimi => "husimi",
            Experiment::Entropy => "entropy",
            Experiment::Threshold => "threshold",
            Experiment::Fidelity => "fidelity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Static,
    Single,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Static => ModelKind::Static,
            Model::Single => ModelKind::Single,
        }
    }
}

/// Imperfection strengths to visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
    /// Prepend `eps = 0`.
    pub zero: bool,
    /// Explicit values; replaces min/max/count when present.
    pub list: Option<Vec<f64>>,
}

impl EpsGrid {
    fn log(min: f64, max: f64, count: usize, zero: bool) -> Self {
        Self {
            min,
            max,
            count,
            spacing: Spacing::Log,
            zero,
            list: None,
        }
    }

    fn listed(values: &[f64]) -> Self {
        Self {
            list: Some(values.to_vec()),
            ..Self::log(1e-4, 1e-3, 0, false)
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out = match &self.list {
            Some(list) => list.clone(),
            None => {
                let n = self.count;
                (0..n)
                    .map(|k| {
                        let frac = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                        match self.spacing {
                            Spacing::Log => self.min * (self.max / self.min).powf(frac),
                            Spacing::Linear => self.min + (self.max - self.min) * frac,
                        }
                    })
                    .collect()
            }
        };
        if self.zero && out.first() != Some(&0.0) {
            out.insert(0, 0.0);
        }
        out
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(list) = &self.list {
            if list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return Err(CliError::config("eps.list: values must be finite and >= 0"));
            }
            if list.windows(2).any(|w| w[1] < w[0]) {
                return Err(CliError::config("eps.list: values must be ascending"));
            }
        } else {
            if !(self.min.is_finite() && self.max.is_finite() && self.max >= self.min) {
                return Err(CliError::config("eps.min/eps.max: need finite min <= max"));
            }
            if self.spacing == Spacing::Log && self.count > 0 && self.min <= 0.0 {
                return Err(CliError::config(
                    "eps.min: must be > 0 for log spacing (use eps.zero for eps = 0)",
                ));
            }
            if self.min < 0.0 {
                return Err(CliError::config("eps.min: must be >= 0"));
            }
        }
        if self.values().is_empty() {
            return Err(CliError::config("eps: the grid is empty"));
        }
        let v = self.values();
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::config("eps: grid values must be ascending"));
        }
        Ok(())
    }
}

/// A fully resolved experiment description. Echoed into every manifest, and
/// sufficient to rerun the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_qubits: Vec<usize>,
    /// Chaos parameter `K`.
    pub chaos: f64,
    pub model: Model,
    /// Coupling ratio `J / delta` of the static chain.
    pub j_coupling: f64,
    pub tau_g: f64,
    /// Impurity qubit; drawn per realization when absent.
    pub impurity_qubit: Option<usize>,
    pub eps: EpsGrid,
    pub realizations: usize,
    pub seed: u64,
    /// `eig:IDX` or `mom:N`.
    pub init: String,
    pub t_max: usize,
    /// Level index, in ascending eigenphase order at the first grid point.
    pub level: usize,
    /// Husimi cells per axis.
    pub grid: usize,
    /// Husimi uncertainty ratio `s = dp / dtheta`.
    pub s: f64,
    /// Strengths at which the spectrum experiment also writes Husimi grids of `level`.
    pub husimi_eps: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            n_qubits: vec![9],
            chaos: std::f64::consts::SQRT_2,
            model: Model::Static,
            j_coupling: 0.0,
            tau_g: 1.0,
            impurity_qubit: None,
            eps: EpsGrid::log(1e-5, 1e-1, 17, true),
            realizations: 10,
            seed: 1,
            init: "eig:0".into(),
            t_max: 1000,
            level: 0,
            grid: 64,
            s: 1.0,
            husimi_eps: Vec::new(),
            a: Constants::default().a,
            b: Constants::default().b,
            out: PathBuf::from("runs"),
            jobs: None,
        };
        match experiment {
            Experiment::Spectrum => Self {
                eps: EpsGrid {
                    spacing: Spacing::Linear,
                    ..EpsGrid::log(0.0, 1e-3, 41, false)
                },
                ..base
            },
            Experiment::Husimi => Self {
                eps: EpsGrid::listed(&[0.0, 4e-4, 1e-3]),
                ..base
            },
            Experiment::Entropy => Self {
                n_qubits: vec![5, 7, 9],
                ..base
            },
            Experiment::Threshold => Self {
                n_qubits: (4..=9).collect(),
                ..base
            },
            Experiment::Fidelity => Self {
                eps: EpsGrid::listed(&[1e-4, 3e-3]),
                ..base
            },
        }
    }

    pub fn constants(&self) -> Constants {
        Constants { a: self.a, b: self.b }
    }

    pub fn model_kind(&self) -> ModelKind {
        self.model.into()
    }

    pub fn initial_state(&self) -> Result<InitialState, CliError> {
        self.init.parse().map_err(|e| CliError::config(format!("init: {e}")))
    }

    pub fn params(&self, n_qubits: usize) -> Result<MapParams, CliError> {
        MapParams::new(n_qubits, self.chaos).map_err(|e| CliError::config(format!("n_qubits/chaos: {e}")))
    }

    /// Imperfection template at unit strength `eps = 1`.
    pub fn template(&self) -> Result<ImperfectionSpec, CliError> {
        let delta = 1.0 / self.tau_g;
        let model = match self.model {
            Model::Static => ImperfectionModel::StaticChain {
                delta,
                j_coupling: self.j_coupling * delta,
            },
            Model::Single => ImperfectionModel::SingleImpurity {
                site: self.impurity_qubit.map_or(ImpuritySite::Random, ImpuritySite::Fixed),
                delta,
            },
        };
        ImperfectionSpec::new(model, self.tau_g).map_err(|e| CliError::config(format!("imperfection: {e}")))
    }

    fn needs_matrix(&self) -> bool {
        match self.experiment {
            Experiment::Fidelity => self.init.starts_with("eig"),
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_qubits.is_empty() {
            return Err(CliError::config("n_qubits: list is empty"));
        }
        let single_size = matches!(
            self.experiment,
            Experiment::Spectrum | Experiment::Husimi | Experiment::Fidelity
        );
        if single_size && self.n_qubits.len() != 1 {
            return Err(CliError::config(format!(
                "n_qubits: {} takes exactly one register size",
                self.experiment.name()
            )));
        }
        let limit = if self.needs_matrix() {
            MATRIX_MAX_QUBITS
        } else {
            FIDELITY_MAX_QUBITS
        };
        for &n in &self.n_qubits {
            if n < 2 {
                return Err(CliError::config(format!("n_qubits: {n} is below 2")));
            }
            if n > limit {
                return Err(CliError::Resource(format!(
                    "n_qubits = {n} exceeds {limit} for the {} experiment{}",
                    self.experiment.name(),
                    if self.needs_matrix() {
                        " (it builds the dense Floquet matrix)"
                    } else {
                        ""
                    }
                )));
            }
            if let Some(q) = self.impurity_qubit {
                if q >= n {
                    return Err(CliError::config(format!("impurity_qubit: {q} outside {n} qubits")));
                }
            }
        }
        if !self.chaos.is_finite() {
            return Err(CliError::config("chaos: must be finite"));
        }
        if !(self.j_coupling >= 0.0 && self.j_coupling.is_finite()) {
            return Err(CliError::config("j_coupling: must be finite and >= 0"));
        }
        if !(self.tau_g > 0.0 && self.tau_g.is_finite()) {
            return Err(CliError::config("tau_g: must be > 0"));
        }
        if self.experiment != Experiment::Threshold {
            self.eps.validate()?;
        }
        if self.realizations == 0 {
            return Err(CliError::config("realizations: must be >= 1"));
        }
        self.initial_state()?;
        if let Ok(InitialState::Eigenstate(i)) = self.initial_state() {
            if self.experiment == Experiment::Fidelity && i >= 1 << self.n_qubits[0] {
                return Err(CliError::config(format!("init: eigenstate {i} outside the spectrum")));
            }
        }
        if matches!(self.experiment, Experiment::Spectrum | Experiment::Husimi) && self.level >= 1 << self.n_qubits[0] {
            return Err(CliError::config(format!("level: {} outside the spectrum", self.level)));
        }
        if self.grid == 0 {
            return Err(CliError::config("grid: must be >= 1"));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(CliError::config("s: must be > 0"));
        }
        if self.husimi_eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(CliError::config("husimi_eps: values must be >= 0"));
        }
        Constants::new(self.a, self.b).map_err(|e| CliError::config(format!("a/b: {e}")))?;
        if self.jobs == Some(0) {
            return Err(CliError::config("jobs: must be >= 1"));
        }
        self.template()?;
        check_writable(&self.out)
    }
}

fn check_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::config(format!("out: cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".qsaw-write-probe");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| CliError::config(format!("out: {} is not writable: {e}", dir.display())))
}

/// Optional settings from a config file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n_qubits: Option<Vec<usize>>,
    pub chaos: Option<f64>,
    pub model: Option<Model>,
    pub j_coupling: Option<f64>,
    pub tau_g: Option<f64>,
    pub impurity_qubit: Option<usize>,
    pub eps: Option<EpsOverrides>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<String>,
    pub t_max: Option<usize>,
    pub level: Option<usize>,
    pub grid: Option<usize>,
    pub s: Option<f64>,
    pub husimi_eps: Option<Vec<f64>>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsOverrides {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: Option<usize>,
    pub spacing: Option<Spacing>,
    pub zero: Option<bool>,
    pub list: Option<Vec<f64>>,
}

impl Overrides {
    /// Parses a TOML config file; errors name the file, line and field.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        set!(
            n_qubits,
            chaos,
            model,
            j_coupling,
            tau_g,
            realizations,
            seed,
            init,
            t_max,
            level,
            grid,
            s,
            husimi_eps,
            a,
            b,
            out
        );
        if self.impurity_qubit.is_some() {
            cfg.impurity_qubit = self.impurity_qubit;
        }
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        if let Some(e) = &self.eps {
            let touched_range = e.min.is_some() || e.max.is_some() || e.count.is_some() || e.spacing.is_some();
            if touched_range {
                cfg.eps.list = None;
            }
            if let Some(v) = e.min {
                cfg.eps.min = v;
            }
            if let Some(v) = e.max {
                cfg.eps.max = v;
            }
            if let Some(v) = e.count {
                cfg.eps.count = v;
            }
            if let Some(v) = e.spacing {
                cfg.eps.spacing = v;
            }
            if let Some(v) = e.zero {
                cfg.eps.zero = v;
            }
            if let Some(v) = &e.list {
                cfg.eps.list = Some(v.clone());
            }
        }
    }
}

/// Defaults, then each override layer in order, then validation.
pub fn resolve(experiment: Experiment, layers: &[&Overrides]) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::defaults(experiment);
    for layer in layers {
        layer.apply(&mut cfg);
    }
    cfg.validate()?;
    Ok(cfg)
}
