//! Optional TOML configuration file.
//!
//! Every section is optional and every key inside a section too; command-line
//! flags override file values, which override built-in defaults.
//!
//! ```toml
//! [global]
//! seed = 3
//! grid = 10001
//! out_dir = "runs"
//!
//! [construct]
//! eps = 0.3
//! domain = [-9.0, 10.0]
//!
//! [certify]
//! grid = 101
//!
//! [experiment]
//! k = 2
//! activation = "elu"
//! activation_beta = 1.0
//!
//! [train]
//! max_steps = 500000
//! success_threshold = 1e-3
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use minwidth_core::experiments::TrainConfig;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub global: GlobalSection,
    pub construct: ConstructSection,
    pub certify: CertifySection,
    pub experiment: ExperimentSection,
    /// Missing keys take the [`TrainConfig`] defaults.
    pub train: Option<TrainConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalSection {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructSection {
    pub eps: Option<f64>,
    pub domain: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySection {
    pub grid: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub k: Option<u32>,
    pub activation: Option<String>,
    pub activation_beta: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Collects validation problems so they can be reported together.
#[derive(Debug, Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.0.push(message());
        }
    }

    pub fn push(&mut self, message: String) {
        self.0.push(message);
    }

    pub fn finish(self) -> Result<(), UsageError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(UsageError(self.0.join("\n  ")))
        }
    }
}

/// Invalid arguments or configuration; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration:\n  {}", self.0)
    }
}

impl std::error::Error for UsageError {}
