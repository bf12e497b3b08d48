use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cppp_core::registry::{RoutePreference, RunSettings};

use crate::error::{CliError, CliResult};
use crate::CommonArgs;

pub const DEFAULT_SEED: u64 = 1;

/// Contents of a `--config` file. Every field is optional so that a run
/// can be described entirely by flags; flags win over the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Registered model name, for `ppp`, `cppp` and `null-dist`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Model- or command-specific parameters.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub route: RoutePreference,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Posterior draws `A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    /// Null replicates `B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Response column of a regression CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Prepend a column of ones to regression covariates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let err = |e: serde_json::Error| CliError::Config(format!("{}: {e}", path.display()));
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(err)?;
        if value.get("config_hash").is_some() {
            value = value.get_mut("config").map(serde_json::Value::take).unwrap_or_default();
        }
        serde_json::from_value(value).map_err(err)
    }

    /// The file (if any) overridden by flags, with defaults filled in.
    pub fn resolve(args: &CommonArgs, default_draws: usize, default_replicates: usize) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if args.data.is_some() {
            cfg.data = args.data.clone();
        }
        if let Some(p) = &args.params {
            cfg.params = serde_json::from_str(p).map_err(|e| CliError::Config(format!("--params: {e}")))?;
        }
        if args.out.is_some() {
            cfg.out = args.out.clone();
        }
        cfg.seed = Some(args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED));
        cfg.workers = Some(args.workers.or(cfg.workers).unwrap_or(0));
        cfg.draws = Some(args.inner_a.or(cfg.draws).unwrap_or(default_draws));
        cfg.replicates = Some(args.outer_b.or(cfg.replicates).unwrap_or(default_replicates));
        if cfg.draws == Some(0) || cfg.replicates == Some(0) {
            return Err(CliError::Config("draws and replicates must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn settings(&self) -> RunSettings {
        let d = RunSettings::default();
        RunSettings {
            draws: self.draws.unwrap_or(d.draws),
            replicates: self.replicates.unwrap_or(d.replicates),
            workers: self.workers.unwrap_or(d.workers),
            route: self.route,
        }
    }

    /// Typed view of `params`; an absent object reads as `{}`.
    pub fn params<P: serde::de::DeserializeOwned>(&self, what: &str) -> CliResult<P> {
        let value = if self.params.is_null() { serde_json::json!({}) } else { self.params.clone() };
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{what} parameters: {e}")))
    }

    /// SHA-256 of the canonical JSON of everything that determines the
    /// results: worker count and output path are left out.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.workers = None;
        semantic.out = None;
        let canonical = serde_json::to_string(&serde_json::to_value(&semantic).expect("config serializes"))
            .expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
