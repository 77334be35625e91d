//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the report is never captured. By default a
//! failing criterion is reported but does not fail the target; set
//! `VQAD_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit. Pass
//! criterion numbers as arguments to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use vqad::checks::run_invariant_suite;
use vqad::ground::{exact_ground_state_with, model_ground_state, SymmetryBreak};
use vqad::hamiltonian::{DebhmParams, Model, TlfiParams};
use vqad::noise::{build_calibration_matrix, mitigate_counts, NoiseModel};
use vqad::observables::{cdw_order_parameter_default, middle_es_degeneracy, site_densities, staggered_magnetization};
use vqad::phasemap::{
    anomaly_sweep_states, discover_phases_states, label_agreement, point_states, reference_phase, vqe_warm_sweep, Axis,
    DiscoverConfig, GridSpec, PhaseMap, PointStates, ReferencePhase, ReferenceThresholds, StateSource,
    SyndromeSettings, VqeSweepConfig,
};
use vqad::rng;
use vqad::statevector::{sample_measurements, StateVector};
use vqad::variational::{
    cost_from_counts, cost_from_expectations, default_trash_count, default_trash_sites, train_syndrome, CostMode,
    SpsaConfig,
};

type Outcome = (bool, String);

const MASTER_SEED: u64 = 2024;

fn random_state(n: usize, r: &mut impl Rng) -> StateVector {
    let amps = (0..1usize << n).map(|_| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).collect();
    StateVector::from_amplitudes(amps, true).unwrap()
}

fn hamming_equivalence() -> Outcome {
    let mut r = rng::stream(MASTER_SEED, &[1]);
    let (cases, shots) = (50, 10_000u64);
    let mut inside = 0;
    for c in 0..cases {
        let psi = random_state(6, &mut r);
        let a = r.random_range(0..6);
        let b = (a + r.random_range(1..6)) % 6;
        let trash = [a.min(b), a.max(b)];
        let exact = cost_from_expectations(&psi, &trash).unwrap();
        let hist = sample_measurements(&psi, &trash, shots, rng::derive(MASTER_SEED, &[1, c])).unwrap();
        let sampled = cost_from_counts(&hist).unwrap();
        if (sampled - exact).abs() <= 3.0 * (2.0 / 4.0 / shots as f64).sqrt() {
            inside += 1;
        }
    }
    let frac = inside as f64 / cases as f64;
    (frac >= 0.95, format!("{inside}/{cases} within 3 sigma"))
}

fn trainability() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [3usize, 4, 8, 16] {
        let model = Model::Tlfi(TlfiParams::new(l, 1.0, 0.3, 0.0));
        let state = model_ground_state(&model, SymmetryBreak::Plus).unwrap().state;
        let trash = default_trash_sites(l, default_trash_count(l)).unwrap();
        let cfg = SpsaConfig::default().with_iters(500).with_seed(rng::derive(MASTER_SEED, &[2, l as u64]));
        let (_, rec) = train_syndrome(&[state], &trash, &cfg, &CostMode::Exact, None).unwrap();
        ok &= rec.converged_cost <= 0.01;
        parts.push(format!("L={l}: {:.4}", rec.converged_cost));
    }
    (ok, parts.join(", "))
}

fn tlfi_boundary() -> Outcome {
    let grid = GridSpec::new(
        Axis::linspace("g_x", 0.1, 2.0, 20),
        Axis::new("g_z", vec![0.0]),
        Model::Tlfi(TlfiParams::new(8, 1.0, 0.0, 0.0)),
    );
    let source = StateSource::Oracle { symmetry_break: SymmetryBreak::None };
    let (states, _) = point_states(&grid, &source, MASTER_SEED).unwrap();
    let train = grid.locate(0.3, 0.0).unwrap();
    let settings = SyndromeSettings {
        trash: default_trash_sites(8, default_trash_count(8)).unwrap(),
        spsa: SpsaConfig::default().with_iters(500),
        train_mode: CostMode::Exact,
        eval_mode: CostMode::Exact,
        init: None,
        restarts: 1,
    };
    let map = anomaly_sweep_states(&grid, &states, train, &settings, MASTER_SEED).unwrap();
    let g = &grid.axis1.values;
    let (k, rise) =
        (0..g.len() - 1).map(|k| (k, map.cost[k + 1] - map.cost[k])).max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let at = (g[k] + g[k + 1]) / 2.0;
    let para: Vec<f64> = (0..g.len()).filter(|&k| g[k] >= 1.5).map(|k| map.cost[k]).collect();
    let (lo, hi) = para.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(*c), hi.max(*c)));
    let trained = map.cost[train.0];
    let plateau = lo >= 0.8 * hi && lo >= 10.0 * trained.max(1e-3);
    (
        (at - 1.0).abs() <= 0.2 && plateau,
        format!(
            "steepest rise {rise:.3} at g_x={at:.2}; g_x>=1.5 cost in [{lo:.3}, {hi:.3}]; training cost {trained:.4}"
        ),
    )
}

struct DebhmGrid {
    grid: GridSpec,
    states: PointStates,
    reference: Vec<ReferencePhase>,
}

fn debhm_grid() -> DebhmGrid {
    let grid = GridSpec::new(
        Axis::linspace("dJ", -0.9, 0.9, 9),
        Axis::linspace("V", 0.0, 4.0, 9),
        Model::Debhm(DebhmParams::new(8, 1.0, 0.0, 0.0)),
    );
    let (states, _) =
        point_states(&grid, &StateSource::Oracle { symmetry_break: SymmetryBreak::None }, MASTER_SEED).unwrap();
    let thresholds = ReferenceThresholds::default();
    let reference = states.states.iter().map(|s| reference_phase(s, &thresholds).unwrap()).collect();
    DebhmGrid { grid, states, reference }
}

/// Training points for MI, CDW and TMI: the deep corners of each phase.
const TRAIN_POINTS: [(&str, (usize, usize)); 3] = [("MI", (0, 0)), ("CDW", (4, 8)), ("TMI", (8, 0))];

fn debhm_settings(mode: CostMode) -> SyndromeSettings {
    SyndromeSettings {
        trash: default_trash_sites(8, 2).unwrap(),
        spsa: SpsaConfig::default().with_iters(500),
        train_mode: mode.clone(),
        eval_mode: mode,
        init: None,
        restarts: 8,
    }
}

/// Mean cost over the reference phase of the training point and over the
/// rest of the grid. An empty side gives NaN, which fails every comparison.
fn phase_means(d: &DebhmGrid, map: &PhaseMap, train: (usize, usize)) -> (f64, f64) {
    let phase = d.reference[d.grid.flat_index(train.0, train.1)];
    let (mut ins, mut outs) = (Vec::new(), Vec::new());
    for k in 0..d.grid.len() {
        if d.reference[k] == phase {
            ins.push(map.cost[k])
        } else {
            outs.push(map.cost[k])
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (mean(&ins), mean(&outs))
}

fn debhm_three_phases(d: &DebhmGrid) -> Outcome {
    let settings = debhm_settings(CostMode::Exact);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, tp) in TRAIN_POINTS {
        let map = anomaly_sweep_states(&d.grid, &d.states, tp, &settings, MASTER_SEED).unwrap();
        let (inside, outside) = phase_means(d, &map, tp);
        ok &= inside <= 0.1 && outside >= 3.0 * inside;
        parts.push(format!("{name} in {inside:.3} out {outside:.3}"));
    }
    let found = discover_phases_states(
        &d.grid,
        &d.states,
        TRAIN_POINTS[0].1,
        &DiscoverConfig::default(),
        &settings,
        MASTER_SEED,
    )
    .unwrap();
    let agreement = label_agreement(&d.grid, &found.labels, &d.reference, 1);
    ok &= found.n_labels() == 3 && agreement >= 0.9;
    parts.push(format!("discovered {} labels, agreement {:.0}%", found.n_labels(), 100.0 * agreement));
    (ok, parts.join("; "))
}

fn ground_truth(d: &DebhmGrid) -> Outcome {
    let g = &d.grid;
    let mut cdw = vec![0.0; g.len()];
    let mut des = vec![0.0; g.len()];
    for k in 0..g.len() {
        let s = &d.states.states[k];
        cdw[k] = cdw_order_parameter_default(&site_densities(s)).unwrap().abs();
        des[k] = middle_es_degeneracy(s).unwrap().abs();
    }
    // Large V means beyond the hardcore CDW onset V = 2J; "elsewhere" keeps
    // a one-cell margin below it.
    let v = &g.axis2.values;
    let large_v = |j: usize| v[j] > 2.0;
    let small_v = |j: usize| v[j] < 2.0 - (v[1] - v[0]);
    let kmax = (0..g.len()).max_by(|a, b| cdw[*a].total_cmp(&cdw[*b])).unwrap();
    let peak_ok = large_v(g.unflatten(kmax).1);
    let elsewhere = (0..g.len()).filter(|&k| small_v(g.unflatten(k).1)).map(|k| cdw[k]).fold(0.0f64, f64::max);
    let degenerate: Vec<(usize, usize)> = (0..g.len()).filter(|&k| des[k] <= 0.05).map(|k| g.unflatten(k)).collect();
    let tmi_only = !degenerate.is_empty() && degenerate.iter().all(|&(i, j)| g.axis1.values[i] > 0.0 && !large_v(j));
    let outside_region = degenerate.iter().filter(|&&(i, j)| !(g.axis1.values[i] > 0.0 && !large_v(j))).count();
    (
        peak_ok && elsewhere <= 0.1 && tmi_only,
        format!(
            "max |O_CDW| {:.3} at V={}; max |O_CDW| for V<2 {elsewhere:.3}; {} points with |D_ES|<=0.05, {outside_region} outside dJ>0 & V<=2",
            cdw[kmax],
            v[g.unflatten(kmax).1],
            degenerate.len()
        ),
    )
}

fn noise_robustness(d: &DebhmGrid) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p2 in [0.01, 0.07] {
        let mode = CostMode::Noisy { n_shots: 1000, seed: 0, noise: NoiseModel::depolarizing(0.001, p2) };
        let settings = debhm_settings(mode);
        for (name, tp) in TRAIN_POINTS {
            let map = anomaly_sweep_states(&d.grid, &d.states, tp, &settings, MASTER_SEED).unwrap();
            let trained = map.rounds[0].record.converged_cost;
            ok &= trained > 0.0;
            if p2 == 0.01 {
                let (inside, outside) = phase_means(d, &map, tp);
                ok &= outside >= 2.0 * inside;
                parts.push(format!("p2={p2} {name}: trained {trained:.3}, in {inside:.3} out {outside:.3}"));
            } else {
                parts.push(format!("p2={p2} {name}: trained {trained:.3}"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn vqe_fidelity() -> Outcome {
    let grid = GridSpec::new(
        Axis::new("g_x", vec![0.1, 0.5, 1.0, 1.5]),
        Axis::new("g_z", vec![0.05, 0.5, 1.0]),
        Model::Tlfi(TlfiParams::new(5, 1.0, 0.0, 0.0).open()),
    );
    // An odd periodic ring frustrates the staggered order, so the chain is open.
    let cfg = VqeSweepConfig { restarts: 4, ..VqeSweepConfig::default() };
    let points = vqe_warm_sweep(&grid, &cfg, MASTER_SEED).unwrap();
    let mut worst = 0.0f64;
    let mut ordered = Vec::new();
    let mut ok = true;
    for p in &points {
        let h = grid.model_at(p.i, p.j).unwrap().hamiltonian().unwrap();
        let e0 = exact_ground_state_with(&h, None, SymmetryBreak::None).unwrap().energy;
        let rel = (p.energy - e0).abs() / e0.abs();
        worst = worst.max(rel);
        let (gx, gz) = (grid.axis1.values[p.i], grid.axis2.values[p.j]);
        if gx <= 0.1 && gz <= 0.5 {
            let s = staggered_magnetization(&p.state);
            ok &= s.abs() >= 0.8;
            ordered.push(format!("S({gx},{gz})={s:+.3}"));
        }
    }
    ok &= worst <= 0.05;
    (
        ok,
        format!(
            "worst relative energy error {:.2}% over {} points; {}",
            100.0 * worst,
            points.len(),
            ordered.join(", ")
        ),
    )
}

fn mitigation() -> Outcome {
    let l = 4;
    let model = Model::Tlfi(TlfiParams::new(l, 1.0, 0.3, 0.0));
    let state = model_ground_state(&model, SymmetryBreak::Plus).unwrap().state;
    let trash = default_trash_sites(l, 2).unwrap();
    let cfg = SpsaConfig::default().with_iters(500).with_seed(MASTER_SEED);
    let (syndrome, rec) = train_syndrome(std::slice::from_ref(&state), &trash, &cfg, &CostMode::Exact, None).unwrap();
    let noise = NoiseModel::symmetric_readout(l, 0.02);
    let mut improved = 0;
    let mut gains = Vec::new();
    for s in 0..10u64 {
        let seed = rng::derive(MASTER_SEED, &[8, s]);
        let raw = syndrome.measure(&state, &rec.final_params, 4000, Some(&noise), seed).unwrap();
        let cal = build_calibration_matrix(&noise, &trash, 10_000, rng::derive(seed, &[1])).unwrap();
        let m = mitigate_counts(&raw, &cal).unwrap();
        let (before, after) = (m.raw_probability("00").unwrap(), m.probability("00").unwrap());
        if after > before {
            improved += 1;
        }
        gains.push(after - before);
    }
    let min_gain = gains.iter().copied().fold(f64::INFINITY, f64::min);
    (
        improved == 10,
        format!(
            "P(00) raised in {improved}/10 seeds, smallest gain {min_gain:+.4}, trained cost {:.4}",
            rec.converged_cost
        ),
    )
}

fn invariant_suite() -> Outcome {
    let mut failed = Vec::new();
    let mut total = 0;
    for seed in 0..5 {
        for r in run_invariant_suite(seed) {
            total += 1;
            if !r.passed {
                failed.push(format!("{} (seed {seed}): {}", r.name, r.detail));
            }
        }
    }
    (failed.is_empty(), if failed.is_empty() { format!("{total} checks passed") } else { failed.join("; ") })
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let strict = std::env::var("VQAD_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let mut debhm: Option<DebhmGrid> = None;
    let mut results = Vec::new();
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let (passed, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(e) => (false, format!("panicked: {}", e.downcast_ref::<String>().cloned().unwrap_or_default())),
        };
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("criterion {n} {name}: {verdict} ({detail}) [{:.1}s]", start.elapsed().as_secs_f64());
        results.push(passed);
    };

    if run(1) {
        report(1, "hamming cost equivalence", &mut hamming_equivalence);
    }
    if run(2) {
        report(2, "trainability scaling", &mut trainability);
    }
    if run(3) {
        report(3, "tlfi boundary", &mut tlfi_boundary);
    }
    if run(4) || run(5) || run(6) {
        debhm = Some(debhm_grid());
    }
    if run(4) {
        report(4, "debhm three phases", &mut || debhm_three_phases(debhm.as_ref().unwrap()));
    }
    if run(5) {
        report(5, "ground-truth observables", &mut || ground_truth(debhm.as_ref().unwrap()));
    }
    if run(6) {
        report(6, "noise robustness", &mut || noise_robustness(debhm.as_ref().unwrap()));
    }
    if run(7) {
        report(7, "vqe fidelity", &mut vqe_fidelity);
    }
    if run(8) {
        report(8, "readout mitigation", &mut mitigation);
    }
    if run(9) {
        report(9, "invariant suite", &mut invariant_suite);
    }

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
