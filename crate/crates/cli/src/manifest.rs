use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Provenance record written next to every output file as
/// `<file>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    /// Command-specific settings that shape the outputs.
    pub parameters: serde_json::Value,
    pub tool_version: String,
    pub timestamp: String,
}

/// Collects the files a command writes, then stamps each with the manifest.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
        manifest.outputs = self.written.clone();
        for path in &self.written {
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            let text = serde_json::to_string_pretty(&manifest)? + "\n";
            std::fs::write(&name, text).with_context(|| format!("writing manifest for {}", path.display()))?;
        }
        Ok(self.written)
    }
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            parameters: serde_json::Value::Null,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}
