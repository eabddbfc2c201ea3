use serde::Serialize;
use serde_json::Value;

use crate::files::FileDigest;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub artifact_version: &'static str,
    pub seed: Option<u64>,
    pub threads: usize,
    /// Fully resolved configuration the run used.
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Per-method failures written as missing rows.
    pub failures: Vec<Value>,
    pub status: &'static str,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_clock_seconds: f64,
}

pub fn status_name(exit_code: u8) -> &'static str {
    match exit_code {
        0 => "ok",
        1 => "partial",
        _ => "error",
    }
}
