//! Run manifests: everything needed to regenerate a run's outputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qsaw_core::gates::GateCounts;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub n_qubits: usize,
    pub eps_index: usize,
    pub epsilon: f64,
    pub realization: usize,
    pub seed: u64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCountRecord {
    pub n_qubits: usize,
    #[serde(flatten)]
    pub counts: GateCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub started_at: String,
    pub wall_time_s: f64,
    pub gate_counts: Vec<GateCountRecord>,
    pub tasks: Vec<TaskRecord>,
    pub outputs: Vec<String>,
    pub status: RunStatus,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("manifest {}: {e}", path.display())))
    }
}
