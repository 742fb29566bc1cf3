use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command: the command words and the fully
/// resolved configuration. Timing fields are informational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: ExperimentConfig,
    /// The resolved configuration as a TOML document, accepted by `--config`.
    pub config_toml: String,
    pub rng_algorithm: String,
    pub software_version: String,
    pub threads: Option<usize>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub exit_code: i32,
    pub error: Option<String>,
    pub outputs: Vec<String>,
    pub result: Value,
}
