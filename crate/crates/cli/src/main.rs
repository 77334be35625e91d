use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};

use vqad_cli::config::{apply_overrides, read_config_file, RunConfig};
use vqad_cli::error::{CliError, CliResult, EXIT_CONFIG};
use vqad_cli::{execute, Command};

/// Variational quantum anomaly detection on simulated spin chains.
#[derive(Debug, Parser)]
#[command(name = "vqad", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config, or a manifest.json from an earlier run to replay it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set spsa.max_iter=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. Falls back to `$VQAD_OUT_ROOT/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid-level parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
}

fn build_config(cli: &Cli) -> CliResult<RunConfig> {
    let c = &cli.common;
    let base = match &c.config {
        Some(p) => read_config_file(p)?,
        None => serde_json::json!({}),
    };
    let mut overrides = c.overrides.clone();
    if let Some(given) = base.get("command").and_then(|v| v.as_str()) {
        if given != cli.command.name() {
            return Err(CliError::Config(format!("config is for `{given}`, not `{}`", cli.command)));
        }
    }
    overrides.push(format!("command=\"{}\"", cli.command.name()));
    if let Some(s) = c.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(w) = c.workers {
        overrides.push(format!("workers={w}"));
    }
    if let Some(n) = c.shots {
        overrides.push(format!("shots={n}"));
    }
    let mut merged = apply_overrides(base, &overrides)?;
    if let Some(out) = &c.out {
        merged["out"] = serde_json::Value::String(out.display().to_string());
    }
    let raw: RunConfig =
        serde_json::from_value(merged).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    raw.resolve()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("vqad: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(n) = cfg.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("vqad: cannot start {n} workers: {e}");
            return ExitCode::from(3);
        }
    }
    match execute(&cfg) {
        Ok(out) => {
            println!("{}: wrote {}", cfg.command(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("vqad: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
