use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::failure::{Classify, CmdResult};

/// Values read from `--config`. Every key is optional; flags take precedence
/// and built-in defaults fill the rest. Relative paths resolve against the
/// file's directory. API keys are never read from here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub workspace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<String>,

    pub learners: Option<usize>,
    pub resources: Option<usize>,
    pub kps: Option<usize>,
    pub courses: Option<usize>,
    pub weeks: Option<u32>,
    pub at_risk_fraction: Option<f64>,

    pub risk_threshold: Option<f64>,
    pub weak_threshold: Option<f64>,
    pub list_length: Option<usize>,

    pub method: Option<String>,
    pub backend: Option<String>,
    pub script: Option<PathBuf>,
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_ms: Option<u64>,
    pub max_retries: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
    pub max_concurrency: Option<usize>,
    pub min_request_interval_ms: Option<u64>,
    pub ablate: Option<String>,
    pub max_plan_versions: Option<u32>,
    pub max_repairs: Option<u32>,
    pub max_path_length: Option<usize>,
    pub load_low: Option<f64>,
    pub load_high: Option<f64>,
    pub cl_ext: Option<f64>,
    pub oracle_max_len: Option<usize>,
    pub oracle_max_minutes: Option<f64>,
    pub templates: Option<PathBuf>,
    pub parallel: Option<usize>,

    pub ksc_mode: Option<String>,
    pub labels: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
            .usage_err()?;
        let mut config: FileConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
            .usage_err()?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.workspace,
            &mut config.out,
            &mut config.script,
            &mut config.templates,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    /// Parses a string-valued key with the type's `FromStr`.
    pub fn parsed<T: std::str::FromStr<Err = String>>(value: &Option<String>, key: &str) -> CmdResult<Option<T>> {
        value
            .as_deref()
            .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("config key {key}: {e}")))
            .transpose()
            .usage_err()
    }
}

/// Flag, then config file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
