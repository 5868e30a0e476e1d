//! On-disk solution format (JSON, schema version 1).

use std::fs;
use std::path::Path;

use fowler_core::solver::{FowlerSolution, PeriodicProfile};
use fowler_core::Params;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub n: u32,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tol_fp: f64,
    pub table_tol: f64,
    pub max_iters: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Solver error text when `converged` is false.
    pub status: String,
    /// Unix seconds; only recorded on request so that reruns stay byte-identical.
    pub timestamp: Option<u64>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub schema_version: u32,
    pub params: ParamsRecord,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "N")]
    pub grid: usize,
    pub psi_values: Vec<f64>,
    #[serde(rename = "J_value")]
    pub j_value: f64,
    pub el_residual: f64,
    pub variant: String,
    pub provenance: Provenance,
}

impl SolutionFile {
    pub fn from_solution(params: &Params, sol: &FowlerSolution, provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params: ParamsRecord {
                n: params.n(),
                sigma: params.sigma(),
            },
            period: sol.profile.period(),
            grid: sol.profile.len(),
            psi_values: sol.profile.values().to_vec(),
            j_value: sol.j_value,
            el_residual: sol.el_residual,
            variant: sol.variant.as_str().to_owned(),
            provenance,
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let raw: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not valid JSON: {e}", path.display())))?;
        match raw.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(CliError::Usage(format!(
                    "unsupported schema version {v} in {}",
                    path.display()
                )))
            }
            None => {
                return Err(CliError::Usage(format!(
                    "unsupported schema: {} has no schema_version",
                    path.display()
                )))
            }
        }
        let file: Self = serde_json::from_value(raw).map_err(|e| {
            CliError::Usage(format!("{} does not match schema 1: {e}", path.display()))
        })?;
        if file.psi_values.len() != file.grid {
            return Err(CliError::Usage(format!(
                "{}: psi_values has {} entries but N = {}",
                path.display(),
                file.psi_values.len(),
                file.grid
            )));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("solution files always serialize");
        text.push('\n');
        fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<Params, CliError> {
        Ok(Params::new(self.params.n, self.params.sigma)?)
    }

    pub fn profile(&self) -> Result<PeriodicProfile, CliError> {
        Ok(PeriodicProfile::new(self.period, self.psi_values.clone())?)
    }
}
