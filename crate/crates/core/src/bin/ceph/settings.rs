//! `--config` file: lowest-precedence defaults.
//!
//! ```toml
//! norms = "norms.txt"
//! thresholds = "thresholds.txt"
//! templates = "templates/"
//! lang = "zh"
//! addr = "0.0.0.0:8080"
//! calibration = 0.1
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use ceph_core::report::Language;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub norms: Option<PathBuf>,
    pub thresholds: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub lang: Option<Language>,
    pub addr: Option<SocketAddr>,
    pub calibration: Option<f64>,
}

impl FileSettings {
    /// Relative paths resolve against the file's directory. Errors carry an exit status.
    pub fn load(path: &Path) -> Result<Self, (u8, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| (3, format!("{}: {e}", path.display())))?;
        let mut settings: FileSettings =
            toml::from_str(&text).map_err(|e| (2, format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut settings.norms, &mut settings.thresholds, &mut settings.templates].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(settings)
    }
}
