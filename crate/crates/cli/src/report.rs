//! Output directory with CSV/JSON files and a run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub struct Bundle {
    dir: PathBuf,
    files: Vec<String>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Bundle { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes a CSV produced by `fill`, refusing non-finite numeric cells.
    pub fn csv<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let text = String::from_utf8(buf).map_err(|e| CliError::Failure(e.to_string()))?;
        if let Some(bad) = non_finite_cell(&text) {
            return Err(CliError::Failure(format!("{name}: non-finite value {bad:?}")));
        }
        self.write(name, text.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json`; the timestamp appears nowhere else.
    pub fn finish(self, command: &str, invocation: Value, config: Option<Value>, resolved: Value) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "rangewalk",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "invocation": invocation,
            "config": config,
            "resolved": resolved,
            "files": self.files,
            "created": chrono::Utc::now().to_rfc3339(),
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn non_finite_cell(text: &str) -> Option<String> {
    text.lines().skip(1).flat_map(|l| l.split(',')).find_map(|c| {
        let t = c.trim().to_ascii_lowercase();
        (t.contains("nan") || t.contains("inf")).then(|| c.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_non_finite() {
        assert_eq!(non_finite_cell("a,b\n1,2\n"), None);
        assert_eq!(non_finite_cell("a,b\n1,NaN\n"), Some("NaN".into()));
        assert_eq!(non_finite_cell("a,b\n-inf,2\n"), Some("-inf".into()));
        // header may contain anything
        assert_eq!(non_finite_cell("info,b\n1,2\n"), None);
    }
}
