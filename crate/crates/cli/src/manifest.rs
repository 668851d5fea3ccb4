//! Run manifests: every resolved parameter of a sweep, written into the
//! summary JSON. Re-running a manifest reproduces the traces bit for bit on
//! one platform.

use lrmr::{StepMode, Termination, TraceRow};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// Centralized: total measurements. Distributed: per-agent counts.
    pub p: Vec<usize>,
    pub mu_list: Vec<f64>,
    pub seed: u64,
    pub normalized: bool,
    pub max_iters: u64,
    pub grad_tol: f64,
    pub opt_tol: f64,
    pub step_mode: StepMode,
    pub init_scale: f64,
    pub record_every: u64,
    pub jobs: usize,
    /// Distributed only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_widths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_threshold: Option<f64>,
    pub library_version: String,
    pub platform: String,
}

impl RunManifest {
    pub fn library_version() -> String {
        env!("CARGO_PKG_VERSION").to_string()
    }

    pub fn platform() -> String {
        format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub mu: f64,
    pub trace_file: String,
    pub iterations: u64,
    pub termination: Termination,
    pub wall_seconds: f64,
    pub final_row: TraceRow,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Summary {
    pub manifest: RunManifest,
    pub runs: Vec<RunResult>,
}
