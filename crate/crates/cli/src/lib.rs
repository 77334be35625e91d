//! Configuration, artifact writing and subcommands of the `vqad` binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;
use std::time::Instant;

pub use artifacts::{write_artifacts, Artifacts, Manifest};
pub use config::{parse_config, Command, RunConfig};
pub use error::{CliError, CliResult};

/// Runs a resolved config and writes its artifacts. Returns the output
/// directory.
pub fn execute(cfg: &RunConfig) -> CliResult<PathBuf> {
    let start = Instant::now();
    let artifacts = commands::run(cfg)?;
    let manifest = Manifest::new(cfg, &artifacts, start.elapsed().as_secs_f64());
    let out = cfg.out_dir();
    write_artifacts(&artifacts, &manifest, &out)?;
    Ok(out)
}
