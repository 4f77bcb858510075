//! JSON run records.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::serialize_native;
use crate::error::{Error, Result};
use crate::model::MrfModel;
use crate::solvers::{SolverConfig, SolverKind, SolverReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub library_version: String,
    pub model_id: String,
    /// SHA-256 of the model's native serialization.
    pub model_hash: String,
    pub solver: SolverKind,
    pub seed: u64,
    pub inits: usize,
    pub config: SolverConfig,
    pub report: SolverReport,
}

impl RunRecord {
    pub fn new(model_id: &str, model: &MrfModel, inits: usize, config: &SolverConfig, report: SolverReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            model_id: model_id.to_string(),
            model_hash: model_hash(model),
            solver: report.solver,
            seed: config.seed,
            inits,
            config: config.clone(),
            report,
        }
    }

    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        let mut a = self.clone();
        a.report.wall_time = other.report.wall_time;
        &a == other
    }
}

pub fn model_hash(model: &MrfModel) -> String {
    Sha256::digest(serialize_native(model).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `{model_id}__{solver}__s{seed}.json`, unique per run key.
pub fn record_file_name(model_id: &str, solver: SolverKind, seed: u64) -> String {
    format!("{model_id}__{solver}__s{seed}.json")
}

pub fn write_run_record(record: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(record)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_run_record(path: impl AsRef<Path>) -> Result<RunRecord> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersionMismatch {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}
