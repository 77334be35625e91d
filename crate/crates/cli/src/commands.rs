//! One function per subcommand. Each returns the files to write; nothing
//! touches the disk until every computation has succeeded.

use std::path::Path;

use serde_json::json;

use vqad::checks::run_invariant_suite;
use vqad::ground::{grid_ground_states, SymmetryBreak};
use vqad::noise::{build_calibration_matrix, mitigate_counts, CalibrationMatrix, NoiseModel};
use vqad::observables::{observable_row, observables_csv};
use vqad::phasemap::{
    anomaly_sweep, discover_phases, point_states, vqe_warm_sweep, Axis, GridSpec, PhaseMap, StateSource,
};
use vqad::rng;
use vqad::statevector::ShotHistogram;
use vqad::variational::{AnsatzKind, Syndrome, TrainedParams};

use crate::artifacts::Artifacts;
use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};

pub const PHASEMAP_CSV: &str = "phasemap.csv";
pub const OBSERVABLES_CSV: &str = "observables.csv";
pub const TRAINED_PARAMS: &str = "trained_params.json";

pub fn run(cfg: &RunConfig) -> CliResult<Artifacts> {
    match cfg.command() {
        Command::GroundTruth => ground_truth(cfg),
        Command::VqeSweep => vqe_sweep(cfg),
        Command::VqadTrain => vqad_train(cfg),
        Command::VqadSweep => vqad_sweep(cfg),
        Command::Discover => discover(cfg),
        Command::Calibrate => calibrate(cfg),
        Command::Mitigate => mitigate(cfg),
        Command::Check => check(cfg),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn ground_truth(cfg: &RunConfig) -> CliResult<Artifacts> {
    let grid = cfg.grid_spec()?;
    let sb = match cfg.source {
        Some(StateSource::Oracle { symmetry_break }) => symmetry_break,
        _ => SymmetryBreak::None,
    };
    let gg = grid_ground_states(&grid, sb)?;
    let rows = grid
        .points()
        .iter()
        .map(|p| {
            let sol = gg.get(p.i, p.j);
            observable_row(p.a1, p.a2, &sol.state, sol.energy)
        })
        .collect::<vqad::Result<Vec<_>>>()?;
    let mut a = Artifacts::default();
    a.add_text(OBSERVABLES_CSV, observables_csv(&rows));
    a.summary = json!({ "points": rows.len() });
    Ok(a)
}

fn vqe_sweep(cfg: &RunConfig) -> CliResult<Artifacts> {
    let grid = cfg.grid_spec()?;
    let vqe = cfg.vqe.clone().unwrap_or_default();
    let points = vqe_warm_sweep(&grid, &vqe, cfg.seed())?;
    let mut rows = Vec::with_capacity(points.len());
    let mut params = Vec::with_capacity(points.len());
    for p in &points {
        let pt = grid.point(p.i, p.j);
        rows.push(observable_row(pt.a1, pt.a2, &p.state, p.energy)?);
        params.push(TrainedParams {
            ansatz: AnsatzKind::Vqe,
            sites: grid.fixed.sites(),
            trash: Vec::new(),
            params: p.params.clone(),
            final_cost: p.energy,
            seed: p.seed,
            model: Some(grid.model_at(p.i, p.j)?),
        });
    }
    let mut a = Artifacts::default();
    a.add_text(OBSERVABLES_CSV, observables_csv(&rows));
    a.add_json("vqe_params.json", &params)?;
    a.summary = json!({ "points": rows.len() });
    Ok(a)
}

fn initial_params(cfg: &RunConfig) -> CliResult<Option<Vec<f64>>> {
    let Some(path) = cfg.syndrome.as_ref().and_then(|s| s.init_params.as_ref()) else {
        return Ok(None);
    };
    let tp: TrainedParams = read_json(path)?;
    let trash = cfg.syndrome.as_ref().and_then(|s| s.trash.clone()).unwrap_or_default();
    if tp.ansatz != AnsatzKind::Syndrome || tp.sites != cfg.sites.unwrap_or(0) || tp.trash != trash {
        return Err(CliError::config("syndrome.init_params", "parameters belong to a different syndrome circuit"));
    }
    tp.circuit()?;
    Ok(Some(tp.params))
}

fn syndrome_params(cfg: &RunConfig, grid: &GridSpec, map: &PhaseMap, round: usize) -> CliResult<TrainedParams> {
    let r = &map.rounds[round];
    let (i, j) = r.train_point;
    Ok(TrainedParams {
        ansatz: AnsatzKind::Syndrome,
        sites: grid.fixed.sites(),
        trash: cfg.syndrome.as_ref().and_then(|s| s.trash.clone()).unwrap_or_default(),
        params: r.params.clone(),
        final_cost: r.record.converged_cost,
        seed: grid.seed_at(cfg.seed(), i, j),
        model: Some(grid.model_at(i, j)?),
    })
}

fn source(cfg: &RunConfig) -> StateSource {
    cfg.source.clone().unwrap_or(StateSource::Oracle { symmetry_break: SymmetryBreak::None })
}

fn round_summary(map: &PhaseMap) -> serde_json::Value {
    json!(map
        .rounds
        .iter()
        .map(|r| json!({
            "train_point": r.train_point,
            "training_cost": r.record.converged_cost,
            "evaluations": r.record.n_evaluations,
            "labeled": r.labeled,
        }))
        .collect::<Vec<_>>())
}

fn vqad_train(cfg: &RunConfig) -> CliResult<Artifacts> {
    let grid = cfg.grid_spec()?;
    let (i, j) = cfg.train_index(&grid)?;
    let pt = grid.point(i, j);
    // Point seeds depend on coordinates only, so the single-point grid
    // trains exactly as a full sweep would.
    let single = GridSpec::new(
        Axis::new(grid.axis1.name.clone(), vec![pt.a1]),
        Axis::new(grid.axis2.name.clone(), vec![pt.a2]),
        grid.fixed.clone(),
    );
    let settings = cfg.syndrome_settings(initial_params(cfg)?)?;
    let map = anomaly_sweep(&single, (0, 0), &source(cfg), &settings, cfg.seed())?;
    let tp = syndrome_params(cfg, &single, &map, 0)?;
    let mut a = Artifacts {
        summary: json!({ "rounds": round_summary(&map), "cost_trace": map.rounds[0].record.cost_trace }),
        ..Artifacts::default()
    };
    a.add_json(TRAINED_PARAMS, &tp)?;
    Ok(a)
}

fn vqad_sweep(cfg: &RunConfig) -> CliResult<Artifacts> {
    let grid = cfg.grid_spec()?;
    let train = cfg.train_index(&grid)?;
    let settings = cfg.syndrome_settings(initial_params(cfg)?)?;
    let map = anomaly_sweep(&grid, train, &source(cfg), &settings, cfg.seed())?;
    let mut a = Artifacts::default();
    a.add_text(PHASEMAP_CSV, map.to_csv());
    a.add_json(TRAINED_PARAMS, &syndrome_params(cfg, &grid, &map, 0)?)?;
    a.summary = json!({ "rounds": round_summary(&map) });
    Ok(a)
}

fn discover(cfg: &RunConfig) -> CliResult<Artifacts> {
    let grid = cfg.grid_spec()?;
    let start = cfg.train_index(&grid)?;
    let settings = cfg.syndrome_settings(initial_params(cfg)?)?;
    let d = cfg.discover.clone().unwrap_or_default();
    let map = discover_phases(&grid, start, &source(cfg), &d, &settings, cfg.seed())?;
    let mut a = Artifacts::default();
    a.add_text(PHASEMAP_CSV, map.to_csv());
    for r in 0..map.rounds.len() {
        a.add_json(&format!("trained_params_round{r}.json"), &syndrome_params(cfg, &grid, &map, r)?)?;
        let mut body = String::from("axis1,axis2,cost\n");
        for p in grid.points() {
            body.push_str(&format!("{},{},{}\n", p.a1, p.a2, map.rounds[r].cost[grid.flat_index(p.i, p.j)]));
        }
        a.add_text(&format!("cost_round{r}.csv"), body);
    }
    a.summary = json!({
        "rounds": round_summary(&map),
        "labels": map.n_labels(),
        "threshold": d.resolved_threshold(settings.trash.len()),
        "termination": map.termination,
    });
    Ok(a)
}

fn readout_noise(cfg: &RunConfig) -> NoiseModel {
    let p = cfg.readout.as_ref().and_then(|r| r.error).unwrap_or(crate::config::DEFAULT_READOUT_ERROR);
    let l = cfg.sites.unwrap_or(0);
    let base = cfg.noise.clone().unwrap_or_default();
    if base.has_readout_error() {
        base
    } else {
        base.with_readout(vec![[p, p]; l])
    }
}

fn calibration(cfg: &RunConfig, trash: &[usize]) -> CliResult<CalibrationMatrix> {
    let r = cfg.readout.clone().unwrap_or_default();
    if let Some(path) = &r.calibration {
        let cal: CalibrationMatrix = read_json(path)?;
        cal.validate()?;
        if cal.trash != trash {
            return Err(CliError::config("readout.calibration", format!("covers {:?}, expected {trash:?}", cal.trash)));
        }
        return Ok(cal);
    }
    let shots = r.calibration_shots.unwrap_or(crate::config::DEFAULT_CALIBRATION_SHOTS);
    Ok(build_calibration_matrix(&readout_noise(cfg), trash, shots, rng::derive(cfg.seed(), &[0xca1]))?)
}

fn calibrate(cfg: &RunConfig) -> CliResult<Artifacts> {
    let trash = cfg.syndrome.as_ref().and_then(|s| s.trash.clone()).unwrap_or_default();
    let cal = calibration(cfg, &trash)?;
    let mut a = Artifacts { summary: json!({ "condition_number": cal.condition_number() }), ..Artifacts::default() };
    a.add_json("calibration.json", &cal)?;
    Ok(a)
}

/// Corrects a given histogram, or trains a syndrome at the training point,
/// measures it under readout error and corrects that.
fn mitigate(cfg: &RunConfig) -> CliResult<Artifacts> {
    let trash = cfg.syndrome.as_ref().and_then(|s| s.trash.clone()).unwrap_or_default();
    let mut a = Artifacts::default();
    let raw: ShotHistogram = match cfg.readout.as_ref().and_then(|r| r.counts.clone()) {
        Some(path) => {
            let h: ShotHistogram = read_json(&path)?;
            h.validate()?;
            h
        }
        None => {
            let grid = cfg.grid_spec()?;
            let (i, j) = cfg.train_index(&grid)?;
            let pt = grid.point(i, j);
            let single = GridSpec::new(
                Axis::new(grid.axis1.name.clone(), vec![pt.a1]),
                Axis::new(grid.axis2.name.clone(), vec![pt.a2]),
                grid.fixed.clone(),
            );
            let src = source(cfg);
            let settings = cfg.syndrome_settings(initial_params(cfg)?)?;
            let map = anomaly_sweep(&single, (0, 0), &src, &settings, cfg.seed())?;
            let (states, _) = point_states(&single, &src, cfg.seed())?;
            let syndrome = Syndrome::new(grid.fixed.sites(), &trash)?;
            let shots = cfg.shots.unwrap_or(crate::config::DEFAULT_NOISY_SHOTS);
            let h = syndrome.measure(
                &states.states[0],
                &map.rounds[0].params,
                shots,
                Some(&readout_noise(cfg)),
                rng::derive(cfg.seed(), &[0x3ea5]),
            )?;
            a.add_json(TRAINED_PARAMS, &syndrome_params(cfg, &single, &map, 0)?)?;
            a.add_json("raw_counts.json", &h)?;
            h
        }
    };
    if raw.measured_qubits != trash {
        return Err(CliError::config("syndrome.trash", format!("histogram measured {:?}", raw.measured_qubits)));
    }
    let cal = calibration(cfg, &trash)?;
    let m = mitigate_counts(&raw, &cal)?;
    let zeros = "0".repeat(trash.len());
    a.summary = json!({
        "raw_all_zero": m.raw_probability(&zeros)?,
        "mitigated_all_zero": m.probability(&zeros)?,
        "mitigated_cost": m.cost(),
    });
    a.add_json("calibration.json", &cal)?;
    a.add_json("mitigated.json", &m)?;
    Ok(a)
}

fn check(cfg: &RunConfig) -> CliResult<Artifacts> {
    let results = run_invariant_suite(cfg.seed());
    for r in &results {
        println!("{:<34} {}  {}", r.name, if r.passed { "ok" } else { "FAILED" }, r.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if !failed.is_empty() {
        return Err(CliError::Runtime(format!("invariant checks failed: {}", failed.join(", "))));
    }
    let mut a = Artifacts::default();
    a.add_json("checks.json", &results)?;
    a.summary = json!({ "passed": results.len() });
    Ok(a)
}
