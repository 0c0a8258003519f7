//! Run manifests written next to every output file.

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use crate::error::{Categorize, Category, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub tool_version: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects what a run did; finished and written once outputs exist.
pub struct Run {
    command: &'static str,
    config: serde_json::Value,
    inputs: Vec<String>,
    seed: u64,
    started_at: String,
}

impl Run {
    pub fn start(
        command: &'static str,
        seed: u64,
        config: impl Serialize,
        inputs: &[&Path],
    ) -> Self {
        Run {
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            started_at: now(),
        }
    }

    fn finish(&self) -> RunManifest {
        RunManifest {
            command: self.command.to_owned(),
            config: self.config.clone(),
            inputs: self.inputs.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: self.seed,
            started_at: self.started_at.clone(),
            finished_at: now(),
        }
    }

    /// Write the manifest to `path` directly.
    pub fn write_manifest(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(&self.finish()).expect("manifest serializes");
        std::fs::write(path, json + "\n").or_fail(Category::Output)
    }

    /// Write `body` to `out` (or stdout), prefixed with a comment naming the
    /// sidecar manifest. The reference is a bare file name so the output
    /// stays byte-identical across reruns and directories.
    pub fn emit(&self, out: Option<&Path>, body: &str) -> CliResult<()> {
        let Some(out) = out else {
            print!("{body}");
            return Ok(());
        };
        let manifest = manifest_path(out);
        let name = manifest
            .file_name()
            .expect("has a file name")
            .to_string_lossy();
        std::fs::write(out, format!("# manifest: {name}\n{body}")).or_fail(Category::Output)?;
        self.write_manifest(&manifest)
    }
}

/// `<out>.manifest.json` next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
