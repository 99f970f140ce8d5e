use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one invocation. Re-running `args` reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Full argument vector, program name first.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub config: Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, args: &[String], seed: Option<u64>, config: Value) -> Self {
        Manifest {
            tool: "crepe".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: args.to_vec(),
            seed,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(crepe_core::Error::from)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text).map_err(crepe_core::Error::from)?)
    }
}

/// `<dir>/manifest.json`.
pub fn in_dir(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}

/// `<file>.manifest.json` next to a single-file output.
pub fn beside(file: &Path) -> PathBuf {
    let mut name = file.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    file.with_file_name(name)
}

/// Sibling path with the extension replaced: `feats.csv` → `feats.<ext>`.
pub fn sibling(file: &Path, ext: &str) -> PathBuf {
    file.with_extension(ext)
}

pub(crate) fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(())
}
