//! Output files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Named file bodies produced by a command, written in order.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    /// Command-specific summary copied into the manifest.
    pub summary: Value,
}

impl Artifacts {
    pub fn add_text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut body = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(format!("{name}: {e}")))?;
        body.push(b'\n');
        self.files.push((name.to_string(), body));
        Ok(())
    }
}

/// Everything needed to replay a run: pass it back with `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub files: Vec<String>,
    pub summary: Value,
    pub wall_clock_seconds: f64,
}

pub const MANIFEST: &str = "manifest.json";

impl Manifest {
    pub fn new(config: &RunConfig, artifacts: &Artifacts, wall_clock_seconds: f64) -> Self {
        Self {
            tool: "vqad".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: config.command().name().into(),
            config: config.clone(),
            master_seed: config.seed(),
            files: artifacts.files.iter().map(|(n, _)| n.clone()).chain([MANIFEST.to_string()]).collect(),
            summary: artifacts.summary.clone(),
            wall_clock_seconds,
        }
    }
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!(".{name}.partial-{}", std::process::id()))
}

fn write_all(dir: &Path, artifacts: &Artifacts, manifest: &Manifest) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, body) in &artifacts.files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    let path = dir.join(MANIFEST);
    let mut body = serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
    body.push(b'\n');
    fs::write(&path, body).map_err(|e| CliError::io(&path, e))
}

/// Writes every artifact and the manifest into `out_dir`. Files are staged
/// in a sibling directory and moved in only once all of them are written;
/// on failure the staging directory is removed and `out_dir` is untouched.
pub fn write_artifacts(artifacts: &Artifacts, manifest: &Manifest, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    if let Some(parent) = out_dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let staging = staging_dir(out_dir);
    let _ = fs::remove_dir_all(&staging);
    let result = write_all(&staging, artifacts, manifest).and_then(|()| {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        let mut written = Vec::new();
        for name in &manifest.files {
            let (from, to) = (staging.join(name), out_dir.join(name));
            fs::rename(&from, &to).map_err(|e| CliError::io(&to, e))?;
            written.push(to);
        }
        Ok(written)
    });
    let _ = fs::remove_dir_all(&staging);
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    fn sample() -> (Artifacts, Manifest) {
        let mut a = Artifacts::default();
        a.add_text("a.csv", "x,y\n1,2\n".into());
        let cfg = RunConfig { command: Some(Command::Check), ..RunConfig::default() };
        let m = Manifest::new(&cfg, &a, 0.5);
        (a, m)
    }

    #[test]
    fn writes_files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let (a, m) = sample();
        let written = write_artifacts(&a, &m, &out).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(out.join("a.csv")).unwrap(), "x,y\n1,2\n");
        let back: Manifest = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(back.files, vec!["a.csv", MANIFEST]);
        let leftovers = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let (mut a, m) = sample();
        a.files.push(("missing/b.csv".into(), b"1".to_vec()));
        let out = dir.path().join("run");
        assert!(write_artifacts(&a, &m, &out).is_err());
        assert!(!out.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
