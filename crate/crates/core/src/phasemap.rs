//! Phase-diagram workflows: single-point training followed by a grid sweep,
//! iterative phase discovery, and warm-started VQE grids.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{grid_ground_states, SymmetryBreak};
use crate::hamiltonian::{energy_expectation, Model};
use crate::observables::{cdw_order_parameter_default, middle_es_degeneracy, site_densities, staggered_magnetization};
use crate::rng;
use crate::statevector::{run_circuit, StateVector};
use crate::variational::{
    build_vqe_ansatz, random_params, run_vqe, train_syndrome, CostMode, SpsaConfig, Syndrome, TrainingRecord,
};

/// Relative tolerance used when matching coordinates to grid values.
const COORD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }

    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(name: impl Into<String>, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
        };
        Self::new(name, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParam(format!("axis {} has no values", self.name)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!("axis {} has non-finite values", self.name)));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidParam(format!("axis {} is not strictly monotone", self.name)));
        }
        Ok(())
    }

    fn position(&self, value: f64) -> Option<usize> {
        let span = self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        self.values.iter().position(|v| (v - value).abs() <= COORD_TOL * span)
    }
}

/// A point of a [`GridSpec`] by index and value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub i: usize,
    pub j: usize,
    pub a1: f64,
    pub a2: f64,
}

/// Two swept model fields; everything else is taken from `fixed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: Model,
}

impl GridSpec {
    pub fn new(axis1: Axis, axis2: Axis, fixed: Model) -> Self {
        Self { axis1, axis2, fixed }
    }

    /// 13×13 grid over `dJ ∈ [-0.9, 0.9]`, `V ∈ [0, 4]` at `J = 1`, half filling.
    pub fn default_debhm(sites: usize) -> Self {
        use crate::hamiltonian::DebhmParams;
        Self::new(
            Axis::linspace("dJ", -0.9, 0.9, 13),
            Axis::linspace("V", 0.0, 4.0, 13),
            Model::Debhm(DebhmParams::new(sites, 1.0, 0.0, 0.0)),
        )
    }

    /// `g_x ∈ [0.1, 2.0]` in steps of 0.1, `g_z ∈ [0, 1]` in steps of 0.1, `J = 1`.
    pub fn default_tlfi(sites: usize) -> Self {
        use crate::hamiltonian::TlfiParams;
        Self::new(
            Axis::linspace("g_x", 0.1, 2.0, 20),
            Axis::linspace("g_z", 0.0, 1.0, 11),
            Model::Tlfi(TlfiParams::new(sites, 1.0, 0.0, 0.0)),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.name == self.axis2.name {
            return Err(Error::InvalidParam(format!("both axes sweep {}", self.axis1.name)));
        }
        self.fixed.field(&self.axis1.name)?;
        self.fixed.field(&self.axis2.name)?;
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    pub fn len(&self) -> usize {
        self.axis1.len() * self.axis2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major with `axis1` outer.
    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        i * self.axis2.len() + j
    }

    pub fn unflatten(&self, k: usize) -> (usize, usize) {
        (k / self.axis2.len(), k % self.axis2.len())
    }

    pub fn point(&self, i: usize, j: usize) -> GridPoint {
        GridPoint { i, j, a1: self.axis1.values[i], a2: self.axis2.values[j] }
    }

    /// Indices of the grid point with these coordinate values.
    pub fn locate(&self, a1: f64, a2: f64) -> Result<(usize, usize)> {
        match (self.axis1.position(a1), self.axis2.position(a2)) {
            (Some(i), Some(j)) => Ok((i, j)),
            _ => Err(Error::OffGrid(a1, a2)),
        }
    }

    pub fn check_index(&self, (i, j): (usize, usize)) -> Result<()> {
        if i >= self.axis1.len() || j >= self.axis2.len() {
            return Err(Error::InvalidParam(format!("grid index ({i}, {j}) outside {:?}", self.shape())));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<GridPoint> {
        (0..self.axis1.len())
            .flat_map(|i| (0..self.axis2.len()).map(move |j| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    /// Boustrophedon order: `axis2` forward on even rows, backward on odd rows.
    pub fn serpentine(&self) -> Vec<GridPoint> {
        let n2 = self.axis2.len();
        (0..self.axis1.len())
            .flat_map(|i| (0..n2).map(move |j| (i, if i % 2 == 0 { j } else { n2 - 1 - j })))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    pub fn model_at(&self, i: usize, j: usize) -> Result<Model> {
        self.check_index((i, j))?;
        self.fixed
            .with_field(&self.axis1.name, self.axis1.values[i])?
            .with_field(&self.axis2.name, self.axis2.values[j])
    }

    /// Per-point seed derived from the master seed and the coordinates.
    pub fn seed_at(&self, master: u64, i: usize, j: usize) -> u64 {
        let p = self.point(i, j);
        rng::point_seed(master, p.a1, p.a2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Oracle,
    Vqe,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Oracle => "oracle",
            Source::Vqe => "vqe",
        })
    }
}

/// Budgets for a warm-started VQE grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeSweepConfig {
    pub spsa: SpsaConfig,
    pub first_iters: usize,
    pub later_iters: usize,
    /// Starts per point: the warm start plus `restarts - 1` cold starts of
    /// `first_iters` each. The lowest energy wins.
    #[serde(default = "one")]
    pub restarts: usize,
}

impl Default for VqeSweepConfig {
    fn default() -> Self {
        Self { spsa: SpsaConfig::default(), first_iters: 500, later_iters: 200, restarts: 1 }
    }
}

/// How the ground state at each grid point is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "source")]
pub enum StateSource {
    Oracle {
        #[serde(default)]
        symmetry_break: SymmetryBreak,
    },
    Vqe(VqeSweepConfig),
}

impl StateSource {
    pub fn kind(&self) -> Source {
        match self {
            StateSource::Oracle { .. } => Source::Oracle,
            StateSource::Vqe(_) => Source::Vqe,
        }
    }
}

/// Ground states of every grid point, flat in [`GridSpec::flat_index`] order.
#[derive(Debug, Clone)]
pub struct PointStates {
    pub source: Source,
    pub states: Vec<StateVector>,
    pub energies: Vec<f64>,
    /// Seed used to produce each state; zero for the oracle.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct VqePoint {
    pub i: usize,
    pub j: usize,
    pub params: Vec<f64>,
    pub energy: f64,
    pub state: StateVector,
    pub seed: u64,
    pub record: TrainingRecord,
}

/// VQE over the grid in serpentine order. The first point starts from a
/// seeded random point and runs `first_iters`; every later point starts from
/// its predecessor's parameters and runs `later_iters`. Extra cold starts,
/// if configured, compete with the warm one. Results come back in flat
/// index order.
pub fn vqe_warm_sweep(grid: &GridSpec, cfg: &VqeSweepConfig, master_seed: u64) -> Result<Vec<VqePoint>> {
    grid.validate()?;
    let ansatz = build_vqe_ansatz(grid.fixed.sites())?;
    let mut out: Vec<Option<VqePoint>> = vec![None; grid.len()];
    let mut previous: Option<Vec<f64>> = None;
    for pt in grid.serpentine() {
        let h = grid.model_at(pt.i, pt.j)?.hamiltonian()?;
        let seed = grid.seed_at(master_seed, pt.i, pt.j);
        let (iters, init) = match &previous {
            None => (cfg.first_iters, random_params(ansatz.n_params(), seed)),
            Some(p) => (cfg.later_iters, p.clone()),
        };
        let mut starts = vec![(seed, iters, init)];
        for r in 1..cfg.restarts.max(1) {
            let s = rng::derive(seed, &[r as u64]);
            starts.push((s, cfg.first_iters, random_params(ansatz.n_params(), s)));
        }
        let runs = starts
            .into_par_iter()
            .map(|(s, iters, init)| {
                Ok((s, run_vqe(&h, &cfg.spsa.clone().with_iters(iters).with_seed(s), Some(&init))?))
            })
            .collect::<Result<Vec<_>>>()?;
        let (seed, outcome) =
            runs.into_iter().min_by(|a, b| a.1.energy.total_cmp(&b.1.energy)).expect("at least one start");
        previous = Some(outcome.record.final_params.clone());
        out[grid.flat_index(pt.i, pt.j)] = Some(VqePoint {
            i: pt.i,
            j: pt.j,
            params: outcome.record.final_params.clone(),
            energy: outcome.energy,
            state: outcome.state,
            seed,
            record: outcome.record,
        });
    }
    Ok(out.into_iter().map(|p| p.expect("serpentine covers every point")).collect())
}

/// Rebuilds the VQE state of a point from stored parameters.
pub fn vqe_state(model: &Model, params: &[f64]) -> Result<(StateVector, f64)> {
    let h = model.hamiltonian()?;
    let ansatz = build_vqe_ansatz(h.n_qubits)?;
    let state = run_circuit(&StateVector::zero(h.n_qubits)?, &ansatz, params)?;
    let energy = energy_expectation(&state, &h)?;
    Ok((state, energy))
}

/// Ground states for every grid point from the chosen source.
pub fn point_states(
    grid: &GridSpec,
    source: &StateSource,
    master_seed: u64,
) -> Result<(PointStates, Option<Vec<VqePoint>>)> {
    match source {
        StateSource::Oracle { symmetry_break } => {
            let gg = grid_ground_states(grid, *symmetry_break)?;
            let energies = gg.solutions.iter().map(|s| s.energy).collect();
            let states = gg.solutions.into_iter().map(|s| s.state).collect();
            Ok((PointStates { source: Source::Oracle, states, energies, seeds: vec![0; grid.len()] }, None))
        }
        StateSource::Vqe(cfg) => {
            let pts = vqe_warm_sweep(grid, cfg, master_seed)?;
            let states = PointStates {
                source: Source::Vqe,
                states: pts.iter().map(|p| p.state.clone()).collect(),
                energies: pts.iter().map(|p| p.energy).collect(),
                seeds: pts.iter().map(|p| p.seed).collect(),
            };
            Ok((states, Some(pts)))
        }
    }
}

/// Syndrome training and evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyndromeSettings {
    pub trash: Vec<usize>,
    pub spsa: SpsaConfig,
    /// Cost estimate used while training.
    #[serde(default)]
    pub train_mode: CostMode,
    /// Cost estimate used on the sweep; its seed is replaced per point.
    #[serde(default)]
    pub eval_mode: CostMode,
    /// Starting parameters; `None` draws them from the SPSA seed.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    /// Independent random starts per round; the lowest final cost wins.
    /// Ignored when `init` is set.
    #[serde(default = "one")]
    pub restarts: usize,
}

fn one() -> usize {
    1
}

/// One training round and the cost map it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub train_point: (usize, usize),
    pub params: Vec<f64>,
    pub record: TrainingRecord,
    pub cost: Vec<f64>,
    /// Points given this round's label.
    pub labeled: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    AllLabeled,
    MaxRounds,
    /// The given round labeled nothing.
    NoProgress {
        round: usize,
    },
}

/// Costs, labels and provenance over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub grid: GridSpec,
    pub n_trash: usize,
    pub training_points: Vec<(usize, usize)>,
    /// Cost from the round that labeled the point, else from the last round.
    pub cost: Vec<f64>,
    pub labels: Vec<Option<usize>>,
    pub staggered: Vec<f64>,
    pub source: Source,
    /// Seed that produced each point's state.
    pub seeds: Vec<u64>,
    pub rounds: Vec<Round>,
    pub termination: Option<Termination>,
}

impl PhaseMap {
    pub fn cost_at(&self, i: usize, j: usize) -> f64 {
        self.cost[self.grid.flat_index(i, j)]
    }

    pub fn label_at(&self, i: usize, j: usize) -> Option<usize> {
        self.labels[self.grid.flat_index(i, j)]
    }

    pub fn n_labels(&self) -> usize {
        let mut l: Vec<usize> = self.labels.iter().flatten().copied().collect();
        l.sort_unstable();
        l.dedup();
        l.len()
    }

    pub const CSV_HEADER: &'static str = "axis1,axis2,cost,label,S,provenance,seed";

    /// One row per grid point; unlabeled points leave `label` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for pt in self.grid.points() {
            let k = self.grid.flat_index(pt.i, pt.j);
            let label = self.labels[k].map(|l| l.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                pt.a1, pt.a2, self.cost[k], label, self.staggered[k], self.source, self.seeds[k]
            ));
        }
        out
    }

    /// Labels with `absorb` renamed to `keep`, e.g. to join the two sign
    /// sectors of one ordered phase.
    pub fn merged_labels(&self, keep: usize, absorb: usize) -> Vec<Option<usize>> {
        self.labels.iter().map(|l| l.map(|v| if v == absorb { keep } else { v })).collect()
    }
}

fn train_round(
    grid: &GridSpec,
    states: &PointStates,
    train_point: (usize, usize),
    settings: &SyndromeSettings,
    master_seed: u64,
) -> Result<(Vec<f64>, TrainingRecord, Vec<f64>)> {
    grid.check_index(train_point)?;
    let (ti, tj) = train_point;
    let train_state = &states.states[grid.flat_index(ti, tj)];
    let seed = grid.seed_at(master_seed, ti, tj);
    let spsa = settings.spsa.clone().with_seed(seed);
    let train_mode = settings.train_mode.with_seed(rng::derive(seed, &[1]));
    let starts = if settings.init.is_some() { 1 } else { settings.restarts.max(1) };
    let runs: Vec<(Syndrome, TrainingRecord)> = (0..starts)
        .into_par_iter()
        .map(|r| {
            let spsa = if r == 0 { spsa.clone() } else { spsa.clone().with_seed(rng::derive(seed, &[2, r as u64])) };
            train_syndrome(
                std::slice::from_ref(train_state),
                &settings.trash,
                &spsa,
                &train_mode,
                settings.init.as_deref(),
            )
        })
        .collect::<Result<_>>()?;
    let (syndrome, record) =
        runs.into_iter().min_by(|a, b| a.1.converged_cost.total_cmp(&b.1.converged_cost)).expect("at least one start");
    let params = record.final_params.clone();
    let cost = evaluate_costs(grid, states, &syndrome, &params, &settings.eval_mode, seed)?;
    Ok((params, record, cost))
}

/// Cost of trained parameters on every grid point, in parallel.
pub fn evaluate_costs(
    grid: &GridSpec,
    states: &PointStates,
    syndrome: &Syndrome,
    params: &[f64],
    mode: &CostMode,
    round_seed: u64,
) -> Result<Vec<f64>> {
    grid.points()
        .into_par_iter()
        .map(|pt| {
            let k = grid.flat_index(pt.i, pt.j);
            let m = mode.with_seed(rng::derive(grid.seed_at(round_seed, pt.i, pt.j), &[2]));
            syndrome.cost(&states.states[k], params, &m, 0)
        })
        .collect()
}

fn empty_map(grid: &GridSpec, states: &PointStates, n_trash: usize) -> PhaseMap {
    PhaseMap {
        grid: grid.clone(),
        n_trash,
        training_points: vec![],
        cost: vec![0.0; grid.len()],
        labels: vec![None; grid.len()],
        staggered: states.states.iter().map(staggered_magnetization).collect(),
        source: states.source,
        seeds: states.seeds.clone(),
        rounds: vec![],
        termination: None,
    }
}

/// Trains at `train_point` and evaluates the syndrome over precomputed states.
pub fn anomaly_sweep_states(
    grid: &GridSpec,
    states: &PointStates,
    train_point: (usize, usize),
    settings: &SyndromeSettings,
    master_seed: u64,
) -> Result<PhaseMap> {
    grid.validate()?;
    let (params, record, cost) = train_round(grid, states, train_point, settings, master_seed)?;
    let mut map = empty_map(grid, states, settings.trash.len());
    map.training_points.push(train_point);
    map.cost = cost.clone();
    map.rounds.push(Round { train_point, params, record, cost, labeled: 0 });
    Ok(map)
}

/// Obtains ground states from `source`, trains at `train_point`, and
/// evaluates the trained syndrome on every grid point.
pub fn anomaly_sweep(
    grid: &GridSpec,
    train_point: (usize, usize),
    source: &StateSource,
    settings: &SyndromeSettings,
    master_seed: u64,
) -> Result<PhaseMap> {
    grid.validate()?;
    grid.check_index(train_point)?;
    let (states, _) = point_states(grid, source, master_seed)?;
    anomaly_sweep_states(grid, &states, train_point, settings, master_seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscoverConfig {
    /// Absolute cost threshold; `None` means `0.3 n_t`.
    #[serde(default)]
    pub threshold: Option<f64>,
    pub max_rounds: usize,
}

impl Default for DiscoverConfig {
    fn default() -> Self {
        Self { threshold: None, max_rounds: 5 }
    }
}

impl DiscoverConfig {
    pub fn resolved_threshold(&self, n_trash: usize) -> f64 {
        self.threshold.unwrap_or(0.3 * n_trash as f64)
    }
}

/// Iterative discovery over precomputed states. Round `r` trains at the
/// current seed point, labels every unlabeled point with cost below the
/// threshold as phase `r`, and moves the seed to the unlabeled point of
/// largest cost.
pub fn discover_phases_states(
    grid: &GridSpec,
    states: &PointStates,
    seed_point: (usize, usize),
    discover: &DiscoverConfig,
    settings: &SyndromeSettings,
    master_seed: u64,
) -> Result<PhaseMap> {
    grid.validate()?;
    grid.check_index(seed_point)?;
    let threshold = discover.resolved_threshold(settings.trash.len());
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidParam(format!("anomaly threshold must be positive, got {threshold}")));
    }
    if discover.max_rounds == 0 {
        return Err(Error::InvalidParam("max_rounds must be at least 1".into()));
    }
    let mut map = empty_map(grid, states, settings.trash.len());
    let mut current = seed_point;
    let mut termination = Termination::MaxRounds;
    for round in 0..discover.max_rounds {
        let (params, record, cost) = train_round(grid, states, current, settings, master_seed)?;
        let mut labeled = 0;
        for (k, c) in cost.iter().enumerate() {
            if map.labels[k].is_none() {
                map.cost[k] = *c;
                if *c < threshold {
                    map.labels[k] = Some(round);
                    labeled += 1;
                }
            }
        }
        map.training_points.push(current);
        map.rounds.push(Round { train_point: current, params, record, cost, labeled });
        if labeled == 0 {
            termination = Termination::NoProgress { round };
            break;
        }
        let next = (0..grid.len())
            .filter(|k| map.labels[*k].is_none())
            .max_by(|a, b| map.cost[*a].total_cmp(&map.cost[*b]).then(b.cmp(a)));
        match next {
            None => {
                termination = Termination::AllLabeled;
                break;
            }
            Some(k) => current = grid.unflatten(k),
        }
    }
    map.termination = Some(termination);
    Ok(map)
}

pub fn discover_phases(
    grid: &GridSpec,
    seed_point: (usize, usize),
    source: &StateSource,
    discover: &DiscoverConfig,
    settings: &SyndromeSettings,
    master_seed: u64,
) -> Result<PhaseMap> {
    grid.validate()?;
    grid.check_index(seed_point)?;
    let (states, _) = point_states(grid, source, master_seed)?;
    discover_phases_states(grid, &states, seed_point, discover, settings, master_seed)
}

/// Reference phases of the dimerized extended Bose-Hubbard chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReferencePhase {
    /// Trivial Mott insulator.
    Mi,
    /// Topological Mott insulator (degenerate entanglement spectrum).
    Tmi,
    /// Charge-density wave.
    Cdw,
}

/// Thresholds for [`reference_phase`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceThresholds {
    /// `|O_CDW|` above which a state counts as density-ordered.
    pub cdw: f64,
    /// `|D_ES|` below which the entanglement spectrum counts as degenerate.
    pub degeneracy: f64,
}

impl Default for ReferenceThresholds {
    fn default() -> Self {
        Self { cdw: 0.5, degeneracy: 0.05 }
    }
}

/// Classifies a half-filled chain state from its CDW order parameter and
/// middle-cut entanglement degeneracy.
pub fn reference_phase(state: &StateVector, thresholds: &ReferenceThresholds) -> Result<ReferencePhase> {
    let o_cdw = cdw_order_parameter_default(&site_densities(state))?;
    if o_cdw.abs() > thresholds.cdw {
        return Ok(ReferencePhase::Cdw);
    }
    let d_es = middle_es_degeneracy(state)?;
    Ok(if d_es.abs() <= thresholds.degeneracy { ReferencePhase::Tmi } else { ReferencePhase::Mi })
}

/// Fraction of points whose label matches the reference under the best
/// one-to-one label assignment (greedy by overlap). Points within `margin`
/// cells of a reference boundary are skipped; unlabeled points count as
/// mismatches.
pub fn label_agreement(grid: &GridSpec, labels: &[Option<usize>], reference: &[ReferencePhase], margin: usize) -> f64 {
    let (n1, n2) = grid.shape();
    let interior = |i: usize, j: usize| {
        let r = reference[grid.flat_index(i, j)];
        let lo_i = i.saturating_sub(margin);
        let lo_j = j.saturating_sub(margin);
        (lo_i..=(i + margin).min(n1 - 1))
            .all(|a| (lo_j..=(j + margin).min(n2 - 1)).all(|b| reference[grid.flat_index(a, b)] == r))
    };
    let kept: Vec<usize> =
        grid.points().iter().filter(|p| interior(p.i, p.j)).map(|p| grid.flat_index(p.i, p.j)).collect();
    if kept.is_empty() {
        return 0.0;
    }
    let mut overlap: std::collections::BTreeMap<(usize, ReferencePhase), usize> = Default::default();
    for &k in &kept {
        if let Some(l) = labels[k] {
            *overlap.entry((l, reference[k])).or_default() += 1;
        }
    }
    let mut pairs: Vec<((usize, ReferencePhase), usize)> = overlap.into_iter().collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut used_labels = std::collections::BTreeSet::new();
    let mut used_phases = std::collections::BTreeSet::new();
    let mut matched = 0;
    for ((l, r), n) in pairs {
        if !used_labels.contains(&l) && !used_phases.contains(&r) {
            used_labels.insert(l);
            used_phases.insert(r);
            matched += n;
        }
    }
    matched as f64 / kept.len() as f64
}

/// Manifest written next to a phase-map CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMapManifest {
    pub grid: GridSpec,
    pub source: StateSource,
    pub settings: SyndromeSettings,
    pub master_seed: u64,
    pub training_points: Vec<(usize, usize)>,
    pub seeds: Vec<u64>,
    pub param_files: Vec<String>,
    pub termination: Option<Termination>,
}
