//! Run configuration: JSON file plus `key=value` overrides, resolved to a
//! fully explicit form that is echoed into every manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use vqad::ground::SymmetryBreak;
use vqad::hamiltonian::{Boundary, DebhmParams, Model, TlfiParams};
use vqad::noise::NoiseModel;
use vqad::phasemap::{Axis, DiscoverConfig, GridSpec, StateSource, SyndromeSettings, VqeSweepConfig};
use vqad::statevector::MAX_QUBITS;
use vqad::variational::{default_trash_count, default_trash_sites, CostMode, SpsaConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GroundTruth,
    VqeSweep,
    VqadTrain,
    VqadSweep,
    Discover,
    Calibrate,
    Mitigate,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroundTruth => "ground-truth",
            Command::VqeSweep => "vqe-sweep",
            Command::VqadTrain => "vqad-train",
            Command::VqadSweep => "vqad-sweep",
            Command::Discover => "discover",
            Command::Calibrate => "calibrate",
            Command::Mitigate => "mitigate",
            Command::Check => "check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tlfi,
    Debhm,
}

/// Fixed model fields. Unset fields take the model defaults; fields that
/// do not belong to the chosen model are rejected at resolution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFields {
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(rename = "dJ", skip_serializing_if = "Option::is_none")]
    pub dimerization: Option<f64>,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub repulsion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filling: Option<usize>,
}

/// An axis given either by explicit values or as `lo..hi` with `n` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl AxisConfig {
    fn resolve(&self, field: &str) -> CliResult<Axis> {
        match (&self.values, self.lo, self.hi, self.n) {
            (Some(v), None, None, None) => Ok(Axis::new(self.name.clone(), v.clone())),
            (None, Some(lo), Some(hi), Some(n)) => Ok(Axis::linspace(self.name.clone(), lo, hi, n)),
            _ => Err(CliError::config(field, "give either `values` or all of `lo`, `hi`, `n`")),
        }
    }
}

impl From<&Axis> for AxisConfig {
    fn from(a: &Axis) -> Self {
        Self { name: a.name.clone(), values: Some(a.values.clone()), lo: None, hi: None, n: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis1: Option<AxisConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis2: Option<AxisConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyndromeConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_t: Option<usize>,
    /// 0-based trash sites; defaults to a centred block of `n_t` sites.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trash: Option<Vec<usize>>,
    /// Training point as `[axis1, axis2]` values on the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_point: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Trained-parameter JSON used as the starting point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_params: Option<PathBuf>,
}

/// Inputs of `calibrate` and `mitigate`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    /// Symmetric flip probability applied to every site.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_shots: Option<u64>,
    /// Existing histogram to correct instead of measuring a trained syndrome.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<PathBuf>,
    /// Existing calibration matrix instead of building one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
}

/// Everything a run needs. As read from disk most fields are optional;
/// [`RunConfig::resolve`] fills every default so the manifest copy is
/// explicit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelFields>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<StateSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub syndrome: Option<SyndromeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spsa: Option<SpsaConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vqe: Option<VqeSweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discover: Option<DiscoverConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    /// Shots per cost estimate; unset means exact expectations unless
    /// `noise` is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_NOISY_SHOTS: u64 = 1000;
pub const DEFAULT_CALIBRATION_SHOTS: u64 = 10_000;
pub const DEFAULT_READOUT_ERROR: f64 = 0.02;
pub const OUT_ROOT_ENV: &str = "VQAD_OUT_ROOT";

/// Parses a config file. A manifest written by an earlier run is accepted
/// too; its resolved config is used as is.
pub fn read_config_file(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?;
    match value {
        Value::Object(mut m) if m.get("tool").and_then(Value::as_str) == Some("vqad") && m.contains_key("config") => {
            Ok(m.remove("config").unwrap_or_default())
        }
        v @ Value::Object(_) => Ok(v),
        _ => Err(CliError::Config(format!("{}: top level must be a JSON object", path.display()))),
    }
}

/// Applies `a.b.c=value` overrides. The value is parsed as JSON when it can
/// be and kept as a string otherwise.
pub fn apply_overrides(mut root: Value, overrides: &[String]) -> CliResult<Value> {
    for item in overrides {
        let (key, raw) =
            item.split_once('=').ok_or_else(|| CliError::Config(format!("override `{item}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::Config(format!("override key `{key}` has an empty segment")));
        }
        let mut node = &mut root;
        for part in &parts[..parts.len() - 1] {
            let obj = node.as_object_mut().ok_or_else(|| CliError::config(key, "parent is not an object"))?;
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        }
        let obj = node.as_object_mut().ok_or_else(|| CliError::config(key, "parent is not an object"))?;
        obj.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(root)
}

/// Reads, overrides and resolves a config.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> CliResult<RunConfig> {
    let base = match path {
        Some(p) => read_config_file(p)?,
        None => Value::Object(Map::new()),
    };
    let merged = apply_overrides(base, overrides)?;
    let cfg: RunConfig =
        serde_json::from_value(merged).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    cfg.resolve()
}

fn check_unused(fields: &ModelFields, kind: ModelKind) -> CliResult<()> {
    let stray = match kind {
        ModelKind::Tlfi => [
            ("params.dJ", fields.dimerization.is_some()),
            ("params.V", fields.repulsion.is_some()),
            ("params.filling", fields.filling.is_some()),
        ],
        ModelKind::Debhm => [
            ("params.g_x", fields.g_x.is_some()),
            ("params.g_z", fields.g_z.is_some()),
            ("params.boundary", fields.boundary.is_some()),
        ],
    };
    match stray.iter().find(|(_, set)| *set) {
        Some((name, _)) => Err(CliError::config(name, "does not apply to this model")),
        None => Ok(()),
    }
}

impl RunConfig {
    pub fn command(&self) -> Command {
        self.command.unwrap_or(Command::Check)
    }

    /// Fills every default and validates against the library's
    /// preconditions. Resolving an already resolved config is a no-op.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let command = self.command.ok_or_else(|| CliError::config("command", "missing"))?;
        let kind = self.model.unwrap_or(ModelKind::Tlfi);
        let default_l = if command == Command::VqeSweep { 5 } else { 8 };
        let l = self.sites.unwrap_or(default_l);
        if !(2..=MAX_QUBITS).contains(&l) {
            return Err(CliError::config("L", format!("must be between 2 and {MAX_QUBITS}, got {l}")));
        }
        let seed = self.seed.unwrap_or(0);

        let given = self.params.clone().unwrap_or_default();
        check_unused(&given, kind)?;
        let params = match kind {
            ModelKind::Tlfi => ModelFields {
                coupling: Some(given.coupling.unwrap_or(1.0)),
                g_x: Some(given.g_x.unwrap_or(0.0)),
                g_z: Some(given.g_z.unwrap_or(0.0)),
                boundary: Some(given.boundary.unwrap_or_default()),
                ..ModelFields::default()
            },
            ModelKind::Debhm => ModelFields {
                coupling: Some(given.coupling.unwrap_or(1.0)),
                dimerization: Some(given.dimerization.unwrap_or(0.0)),
                repulsion: Some(given.repulsion.unwrap_or(0.0)),
                filling: given.filling.or(l.is_multiple_of(2).then_some(l / 2)),
                ..ModelFields::default()
            },
        };

        let mut resolved = RunConfig {
            command: Some(command),
            model: Some(kind),
            sites: Some(l),
            seed: Some(seed),
            params: Some(params),
            workers: self.workers,
            out: self.out.clone(),
            ..RunConfig::default()
        };
        let model = resolved.model_spec()?;
        model.hamiltonian().map_err(|e| CliError::config("params", e))?;
        if command == Command::Check {
            return Ok(resolved);
        }

        let default_grid = match kind {
            ModelKind::Tlfi => GridSpec::default_tlfi(l),
            ModelKind::Debhm => GridSpec::default_debhm(l),
        };
        let g = self.grid.clone().unwrap_or_default();
        let axis1 = g.axis1.as_ref().map(|a| a.resolve("grid.axis1")).transpose()?.unwrap_or(default_grid.axis1);
        let axis2 = g.axis2.as_ref().map(|a| a.resolve("grid.axis2")).transpose()?.unwrap_or(default_grid.axis2);
        let grid = GridSpec::new(axis1, axis2, model.clone());
        grid.validate().map_err(|e| CliError::config("grid", e))?;
        resolved.grid = Some(GridConfig { axis1: Some((&grid.axis1).into()), axis2: Some((&grid.axis2).into()) });

        let spsa = self.spsa.clone().unwrap_or_default();
        spsa.validate().map_err(|e| CliError::config("spsa", e))?;
        resolved.spsa = Some(spsa);

        match command {
            Command::GroundTruth => {
                let source = self.source.clone().unwrap_or(StateSource::Oracle { symmetry_break: SymmetryBreak::None });
                if !matches!(source, StateSource::Oracle { .. }) {
                    return Err(CliError::config("source", "ground-truth always uses the exact oracle"));
                }
                resolved.source = Some(source);
            }
            Command::VqeSweep => {
                resolved.vqe = Some(self.vqe.clone().unwrap_or_default());
            }
            _ => {}
        }

        if matches!(command, Command::VqadTrain | Command::VqadSweep | Command::Discover | Command::Mitigate) {
            let source = self.source.clone().unwrap_or(StateSource::Oracle { symmetry_break: SymmetryBreak::None });
            resolved.source = Some(source);
            let s = self.syndrome.clone().unwrap_or_default();
            let trash = match (&s.trash, s.n_t) {
                (Some(t), Some(n)) if t.len() != n => {
                    return Err(CliError::config("syndrome.trash", format!("{} sites but n_t = {n}", t.len())))
                }
                (Some(t), _) => t.clone(),
                (None, n) => default_trash_sites(l, n.unwrap_or(default_trash_count(l)))
                    .map_err(|e| CliError::config("syndrome.n_t", e))?,
            };
            vqad::variational::build_syndrome_circuit(l, &trash).map_err(|e| CliError::config("syndrome.trash", e))?;
            let first = grid.point(0, 0);
            let train_point = s.train_point.unwrap_or([first.a1, first.a2]);
            grid.locate(train_point[0], train_point[1]).map_err(|e| CliError::config("syndrome.train_point", e))?;
            if let Some(p) = &s.init_params {
                if !p.is_file() {
                    return Err(CliError::config("syndrome.init_params", format!("{} does not exist", p.display())));
                }
            }
            let restarts = s.restarts.unwrap_or(1);
            if restarts == 0 {
                return Err(CliError::config("syndrome.restarts", "must be at least 1"));
            }
            resolved.syndrome = Some(SyndromeConfig {
                n_t: Some(trash.len()),
                trash: Some(trash),
                train_point: Some(train_point),
                restarts: Some(restarts),
                init_params: s.init_params,
            });
            if let Some(noise) = &self.noise {
                noise.validate().map_err(|e| CliError::config("noise", e))?;
            }
            resolved.noise = self.noise.clone();
            resolved.shots = match (self.shots, &self.noise) {
                (Some(0), _) => return Err(CliError::config("shots", "must be at least 1")),
                (Some(n), _) => Some(n),
                (None, Some(_)) => Some(DEFAULT_NOISY_SHOTS),
                (None, None) => None,
            };
        }
        if command == Command::Discover {
            let d = self.discover.clone().unwrap_or_default();
            if d.threshold.is_some_and(|t| t <= 0.0) {
                return Err(CliError::config("discover.threshold", "must be positive"));
            }
            if d.max_rounds == 0 {
                return Err(CliError::config("discover.max_rounds", "must be at least 1"));
            }
            resolved.discover = Some(d);
        }
        if matches!(command, Command::Calibrate | Command::Mitigate) {
            let r = self.readout.clone().unwrap_or_default();
            let error = r.error.unwrap_or(DEFAULT_READOUT_ERROR);
            if !(0.0..0.5).contains(&error) {
                return Err(CliError::config("readout.error", format!("must lie in [0, 0.5), got {error}")));
            }
            let shots = r.calibration_shots.unwrap_or(DEFAULT_CALIBRATION_SHOTS);
            if shots == 0 {
                return Err(CliError::config("readout.calibration_shots", "must be at least 1"));
            }
            for (field, path) in [("readout.counts", &r.counts), ("readout.calibration", &r.calibration)] {
                if let Some(p) = path {
                    if !p.is_file() {
                        return Err(CliError::config(field, format!("{} does not exist", p.display())));
                    }
                }
            }
            resolved.readout = Some(ReadoutConfig { error: Some(error), calibration_shots: Some(shots), ..r });
            if command == Command::Calibrate && resolved.syndrome.is_none() {
                let n_t = self.syndrome.as_ref().and_then(|s| s.n_t).unwrap_or(default_trash_count(l));
                let trash = match self.syndrome.as_ref().and_then(|s| s.trash.clone()) {
                    Some(t) => t,
                    None => default_trash_sites(l, n_t).map_err(|e| CliError::config("syndrome.n_t", e))?,
                };
                resolved.syndrome =
                    Some(SyndromeConfig { n_t: Some(trash.len()), trash: Some(trash), ..Default::default() });
            }
        }
        if resolved.workers == Some(0) {
            return Err(CliError::config("workers", "must be at least 1"));
        }
        Ok(resolved)
    }

    /// The fixed model. Needs a resolved config.
    pub fn model_spec(&self) -> CliResult<Model> {
        let l = self.sites.ok_or_else(|| CliError::config("L", "missing"))?;
        let p = self.params.clone().unwrap_or_default();
        Ok(match self.model.unwrap_or(ModelKind::Tlfi) {
            ModelKind::Tlfi => Model::Tlfi(TlfiParams {
                boundary: p.boundary.unwrap_or_default(),
                ..TlfiParams::new(l, p.coupling.unwrap_or(1.0), p.g_x.unwrap_or(0.0), p.g_z.unwrap_or(0.0))
            }),
            ModelKind::Debhm => Model::Debhm(DebhmParams {
                filling: p.filling,
                ..DebhmParams::new(
                    l,
                    p.coupling.unwrap_or(1.0),
                    p.dimerization.unwrap_or(0.0),
                    p.repulsion.unwrap_or(0.0),
                )
            }),
        })
    }

    pub fn grid_spec(&self) -> CliResult<GridSpec> {
        let g = self.grid.as_ref().ok_or_else(|| CliError::config("grid", "missing"))?;
        let axis = |a: &Option<AxisConfig>, name: &str| {
            a.as_ref().ok_or_else(|| CliError::config(name, "missing")).and_then(|a| a.resolve(name))
        };
        Ok(GridSpec::new(axis(&g.axis1, "grid.axis1")?, axis(&g.axis2, "grid.axis2")?, self.model_spec()?))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Cost mode for training and evaluation.
    pub fn cost_mode(&self) -> CostMode {
        match (&self.noise, self.shots) {
            (Some(noise), n) => {
                CostMode::Noisy { n_shots: n.unwrap_or(DEFAULT_NOISY_SHOTS), seed: 0, noise: noise.clone() }
            }
            (None, Some(n)) => CostMode::Shots { n_shots: n, seed: 0 },
            (None, None) => CostMode::Exact,
        }
    }

    pub fn syndrome_settings(&self, init: Option<Vec<f64>>) -> CliResult<SyndromeSettings> {
        let s = self.syndrome.as_ref().ok_or_else(|| CliError::config("syndrome", "missing"))?;
        let mode = self.cost_mode();
        Ok(SyndromeSettings {
            trash: s.trash.clone().unwrap_or_default(),
            spsa: self.spsa.clone().unwrap_or_default(),
            train_mode: mode.clone(),
            eval_mode: mode,
            init,
            restarts: s.restarts.unwrap_or(1),
        })
    }

    pub fn train_index(&self, grid: &GridSpec) -> CliResult<(usize, usize)> {
        let p = self
            .syndrome
            .as_ref()
            .and_then(|s| s.train_point)
            .ok_or_else(|| CliError::config("syndrome.train_point", "missing"))?;
        grid.locate(p[0], p[1]).map_err(|e| CliError::config("syndrome.train_point", e))
    }

    /// Output directory: the config value, then `$VQAD_OUT_ROOT/<command>`,
    /// then `vqad-out/<command>`.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(o) = &self.out {
            return o.clone();
        }
        let root = std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("vqad-out"));
        root.join(self.command().name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> CliResult<RunConfig> {
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve()
    }

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = parse(json!({"model": "tlfi", "L": 5, "command": "vqad-sweep", "seed": 7})).unwrap();
        assert_eq!(cfg.syndrome.as_ref().unwrap().n_t, Some(2));
        assert_eq!(cfg.syndrome.as_ref().unwrap().trash, Some(vec![2, 3]));
        assert_eq!(cfg.spsa, Some(SpsaConfig::default()));
        let grid = cfg.grid_spec().unwrap();
        assert_eq!(grid.shape(), (20, 11));
        assert_eq!(cfg.cost_mode(), CostMode::Exact);
        assert_eq!(cfg.resolve().unwrap(), cfg);
    }

    #[test]
    fn oversized_chain_is_rejected() {
        let err = parse(json!({"command": "vqad-sweep", "L": 33})).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("L")), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(json!({"command": "check", "Lx": 4})).is_err());
        assert!(parse(json!({"command": "vqad-sweep", "spsa": {"iters": 4}})).is_err());
        assert!(parse(json!({"command": "vqad-sweep", "params": {"V": 1.0}})).is_err());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let v = apply_overrides(json!({"command": "vqad-sweep"}), &["spsa.max_iter=7".into(), "model=debhm".into()])
            .unwrap();
        let cfg: RunConfig = serde_json::from_value(v).unwrap();
        let cfg = cfg.resolve().unwrap();
        assert_eq!(cfg.spsa.unwrap().max_iter, 7);
        assert_eq!(cfg.model, Some(ModelKind::Debhm));
        assert!(apply_overrides(json!({}), &["novalue".into()]).is_err());
        assert!(apply_overrides(json!({"seed": 3}), &["seed.x=1".into()]).is_err());
    }

    #[test]
    fn resolution_is_deterministic() {
        let raw = json!({"command": "discover", "model": "debhm", "L": 6, "grid": {"axis1": {"name": "dJ", "lo": -0.5, "hi": 0.5, "n": 3}}});
        let a = serde_json::to_string(&parse(raw.clone()).unwrap()).unwrap();
        let b = serde_json::to_string(&parse(raw).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn train_point_must_be_on_the_grid() {
        let raw = json!({"command": "vqad-sweep", "L": 4, "syndrome": {"train_point": [0.33, 0.0]}});
        assert!(parse(raw).is_err());
    }

    #[test]
    fn noise_implies_shots() {
        let cfg = parse(json!({"command": "vqad-train", "L": 4, "noise": {"p1": 0.001, "p2": 0.01}})).unwrap();
        assert_eq!(cfg.shots, Some(DEFAULT_NOISY_SHOTS));
        assert!(matches!(cfg.cost_mode(), CostMode::Noisy { n_shots: 1000, .. }));
    }
}
