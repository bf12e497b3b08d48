use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;

/// Everything needed to reproduce and audit one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub config: AnalysisConfig,
    pub config_hash: String,
    pub data_sha256: Option<String>,
    pub wall_time_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cppp: Option<f64>,
    pub report: serde_json::Value,
}
