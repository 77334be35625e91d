//! Variational circuits and their training.
//!
//! Two circuit families share the RY/CZ gate set:
//!
//! - the VQE ansatz: an RY layer, a CZ ring, another RY layer (`2L`
//!   parameters);
//! - the anomaly syndrome: `n_t` layers of RY on every qubit followed by CZs
//!   that couple each non-trash qubit to one trash qubit (round-robin across
//!   layers) and chain the trash qubits, then a final RY on each trash qubit
//!   (`n_t L + n_t` parameters).
//!
//! The syndrome cost is the mean Hamming weight of the trash readout, which
//! for a pure state equals `Σ_j (1 - <Z_j>)/2`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{energy_expectation, Model, PauliHamiltonian};
use crate::noise::{noisy_execute, NoiseModel};
use crate::rng;
use crate::statevector::{
    run_circuit, sample_measurements, Gate, ParamCircuit, ShotHistogram, StateVector, MAX_QUBITS,
};

fn check_chain(l: usize) -> Result<()> {
    if l < 2 {
        return Err(Error::InvalidParam(format!("ansatz needs L >= 2, got {l}")));
    }
    if l > MAX_QUBITS {
        return Err(Error::QubitCount(l, MAX_QUBITS));
    }
    Ok(())
}

/// RY layer, CZ ring `(i, i+1 mod L)`, RY layer. For `L = 2` the ring is a
/// single CZ.
pub fn build_vqe_ansatz(l: usize) -> Result<ParamCircuit> {
    check_chain(l)?;
    let mut gates: Vec<Gate> = (0..l).map(|q| Gate::ry(q, q)).collect();
    let ring = if l == 2 { 1 } else { l };
    gates.extend((0..ring).map(|i| Gate::Cz(i, (i + 1) % l)));
    gates.extend((0..l).map(|q| Gate::ry(q, l + q)));
    ParamCircuit::new(l, gates, 2 * l)
}

/// `⌊log2 L⌋`.
pub fn default_trash_count(l: usize) -> usize {
    l.max(1).ilog2() as usize
}

/// Contiguous block of `n_t` sites starting at `⌈(L - n_t)/2⌉`.
pub fn default_trash_sites(l: usize, n_t: usize) -> Result<Vec<usize>> {
    if n_t == 0 || n_t >= l {
        return Err(Error::InvalidParam(format!("need 1 <= n_t < L, got n_t = {n_t}, L = {l}")));
    }
    let start = (l - n_t).div_ceil(2);
    Ok((start..start + n_t).collect())
}

/// Entangling pattern of one syndrome layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyndromeLayer {
    /// `(non-trash, trash)` CZ pairs.
    pub cross: Vec<(usize, usize)>,
    /// CZs between consecutive trash sites.
    pub trash_chain: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyndromeSpec {
    pub n_qubits: usize,
    pub trash: Vec<usize>,
    pub non_trash: Vec<usize>,
    pub layers: Vec<SyndromeLayer>,
}

impl SyndromeSpec {
    pub fn n_trash(&self) -> usize {
        self.trash.len()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_trash() * self.n_qubits + self.n_trash()
    }

    /// Checks the schedule: one partner per non-trash qubit per layer, every
    /// cross pair exactly once overall, and `n_layers = n_t`.
    pub fn validate(&self) -> Result<()> {
        let n_t = self.n_trash();
        if self.n_layers() != n_t {
            return Err(Error::Circuit(format!("{} layers for {} trash qubits", self.n_layers(), n_t)));
        }
        let mut seen = std::collections::HashSet::new();
        for (ell, layer) in self.layers.iter().enumerate() {
            let mut partners: Vec<usize> = layer.cross.iter().map(|&(q, _)| q).collect();
            partners.sort_unstable();
            if partners != self.non_trash {
                return Err(Error::Circuit(format!("layer {ell} does not pair every non-trash qubit once")));
            }
            for &(q, t) in &layer.cross {
                if !self.trash.contains(&t) || !seen.insert((q, t)) {
                    return Err(Error::Circuit(format!("pair ({q}, {t}) repeated or invalid")));
                }
            }
        }
        if seen.len() != self.non_trash.len() * n_t {
            return Err(Error::Circuit("schedule misses some (non-trash, trash) pairs".into()));
        }
        Ok(())
    }
}

/// Anomaly-syndrome circuit on `l` qubits with the given trash sites.
pub fn build_syndrome_circuit(l: usize, trash: &[usize]) -> Result<(ParamCircuit, SyndromeSpec)> {
    check_chain(l)?;
    let n_t = trash.len();
    if n_t == 0 || n_t >= l {
        return Err(Error::InvalidParam(format!("need 1 <= n_t < L, got n_t = {n_t}, L = {l}")));
    }
    let mut seen = vec![false; l];
    for &t in trash {
        if t >= l {
            return Err(Error::SiteOutOfRange { site: t, n_qubits: l });
        }
        if std::mem::replace(&mut seen[t], true) {
            return Err(Error::DuplicateSite(t));
        }
    }
    let non_trash: Vec<usize> = (0..l).filter(|q| !seen[*q]).collect();

    let mut gates = Vec::new();
    let mut layers = Vec::with_capacity(n_t);
    let mut slot = 0;
    for ell in 0..n_t {
        for q in 0..l {
            gates.push(Gate::ry(q, slot));
            slot += 1;
        }
        let cross: Vec<(usize, usize)> =
            non_trash.iter().enumerate().map(|(k, &q)| (q, trash[(k + ell) % n_t])).collect();
        let trash_chain: Vec<(usize, usize)> = trash.windows(2).map(|w| (w[0], w[1])).collect();
        gates.extend(cross.iter().chain(&trash_chain).map(|&(a, b)| Gate::Cz(a, b)));
        layers.push(SyndromeLayer { cross, trash_chain });
    }
    for &t in trash {
        gates.push(Gate::ry(t, slot));
        slot += 1;
    }
    let spec = SyndromeSpec { n_qubits: l, trash: trash.to_vec(), non_trash, layers };
    debug_assert_eq!(slot, spec.n_params());
    Ok((ParamCircuit::new(l, gates, slot)?, spec))
}

/// Mean Hamming weight of the recorded bitstrings.
pub fn cost_from_counts(hist: &ShotHistogram) -> Result<f64> {
    if hist.n_shots == 0 {
        return Err(Error::EmptyHistogram);
    }
    hist.validate()?;
    let ones: u64 = hist.counts.iter().map(|(k, &c)| c * k.bytes().filter(|&b| b == b'1').count() as u64).sum();
    Ok(ones as f64 / hist.n_shots as f64)
}

/// `Σ_j (1 - <Z_j>)/2` over the trash sites.
pub fn cost_from_expectations(state: &StateVector, trash: &[usize]) -> Result<f64> {
    state.check_qubit_list(trash)?;
    trash.iter().map(|&t| state.expectation_z(t).map(|z| (1.0 - z) / 2.0)).sum()
}

/// How the syndrome cost is estimated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CostMode {
    /// Exact expectation values.
    #[default]
    Exact,
    /// Ideal shots.
    Shots { n_shots: u64, seed: u64 },
    /// Noisy trajectories with readout error.
    Noisy { n_shots: u64, seed: u64, noise: NoiseModel },
}

impl CostMode {
    pub fn shots(&self) -> Option<u64> {
        match self {
            CostMode::Exact => None,
            CostMode::Shots { n_shots, .. } | CostMode::Noisy { n_shots, .. } => Some(*n_shots),
        }
    }

    pub fn with_seed(&self, new_seed: u64) -> CostMode {
        match self.clone() {
            CostMode::Exact => CostMode::Exact,
            CostMode::Shots { n_shots, .. } => CostMode::Shots { n_shots, seed: new_seed },
            CostMode::Noisy { n_shots, noise, .. } => CostMode::Noisy { n_shots, seed: new_seed, noise },
        }
    }
}

/// A syndrome circuit bound to its trash sites.
#[derive(Debug, Clone)]
pub struct Syndrome {
    pub circuit: ParamCircuit,
    pub spec: SyndromeSpec,
}

impl Syndrome {
    pub fn new(l: usize, trash: &[usize]) -> Result<Self> {
        let (circuit, spec) = build_syndrome_circuit(l, trash)?;
        Ok(Self { circuit, spec })
    }

    pub fn trash(&self) -> &[usize] {
        &self.spec.trash
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    /// Cost of one input state. `stream` selects the random stream in the
    /// sampled modes.
    pub fn cost(&self, state: &StateVector, params: &[f64], mode: &CostMode, stream: u64) -> Result<f64> {
        match mode {
            CostMode::Exact => cost_from_expectations(&run_circuit(state, &self.circuit, params)?, self.trash()),
            CostMode::Shots { n_shots, seed } => {
                let out = run_circuit(state, &self.circuit, params)?;
                cost_from_counts(&sample_measurements(&out, self.trash(), *n_shots, rng::derive(*seed, &[stream]))?)
            }
            CostMode::Noisy { n_shots, seed, noise } => {
                let hist = noisy_execute(
                    state,
                    &self.circuit,
                    params,
                    self.trash(),
                    *n_shots,
                    noise,
                    rng::derive(*seed, &[stream]),
                )?;
                cost_from_counts(&hist)
            }
        }
    }

    /// Trash-qubit readout histogram, ideal or noisy.
    pub fn measure(
        &self,
        state: &StateVector,
        params: &[f64],
        n_shots: u64,
        noise: Option<&NoiseModel>,
        seed: u64,
    ) -> Result<ShotHistogram> {
        match noise {
            Some(noise) => noisy_execute(state, &self.circuit, params, self.trash(), n_shots, noise, seed),
            None => sample_measurements(&run_circuit(state, &self.circuit, params)?, self.trash(), n_shots, seed),
        }
    }
}

/// Missing fields take their [`Default`] values when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpsaConfig {
    pub max_iter: usize,
    /// Learning-rate numerator; `None` calibrates it from the initial point.
    #[serde(default)]
    pub a: Option<f64>,
    pub c: f64,
    /// Stability constant; `None` means `0.1 * max_iter`.
    #[serde(rename = "A", default)]
    pub stability: Option<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
    /// Per-parameter size of the first update when `a` is calibrated.
    #[serde(default = "default_target_step")]
    pub target_step: f64,
    #[serde(default = "default_calibration_samples")]
    pub calibration_samples: usize,
    /// Gradient estimates averaged per iteration.
    #[serde(default = "default_resamplings")]
    pub resamplings: usize,
}

fn default_resamplings() -> usize {
    1
}

fn default_target_step() -> f64 {
    0.1
}

fn default_calibration_samples() -> usize {
    10
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            a: None,
            c: 0.1,
            stability: None,
            alpha: 0.602,
            gamma: 0.101,
            seed: 0,
            target_step: default_target_step(),
            calibration_samples: default_calibration_samples(),
            resamplings: default_resamplings(),
        }
    }
}

impl SpsaConfig {
    pub fn with_iters(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(format!("SPSA: {msg}")));
        if let Some(a) = self.a {
            if !(a > 0.0 && a.is_finite()) {
                return bad("a must be positive");
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c must be positive");
        }
        if !(0.0 < self.gamma && self.gamma < self.alpha && self.alpha <= 1.0) {
            return bad("need 0 < gamma < alpha <= 1");
        }
        if let Some(s) = self.stability {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("A must be non-negative");
            }
        }
        if !(self.target_step > 0.0 && self.target_step.is_finite()) {
            return bad("target_step must be positive");
        }
        if self.resamplings == 0 {
            return bad("resamplings must be at least 1");
        }
        Ok(())
    }

    pub fn stability_constant(&self) -> f64 {
        self.stability.unwrap_or(0.1 * self.max_iter as f64)
    }

    /// `(a_k, c_k)` for iteration `k` given the resolved `a`.
    pub fn gains(&self, a: f64, k: usize) -> (f64, f64) {
        let k = k as f64;
        let ak = a / (k + 1.0 + self.stability_constant()).powf(self.alpha);
        let ck = self.c / (k + 1.0).powf(self.gamma);
        (ak, ck)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    /// Best parameters seen.
    pub final_params: Vec<f64>,
    /// Cost at the start and after every update.
    pub cost_trace: Vec<f64>,
    pub n_evaluations: usize,
    /// `min(cost_trace)`.
    pub converged_cost: f64,
    /// Resolved learning-rate numerator.
    pub a: f64,
}

fn rademacher<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn shifted(theta: &[f64], delta: &[f64], step: f64) -> Vec<f64> {
    theta.iter().zip(delta).map(|(t, d)| t + step * d).collect()
}

/// Minimizes a black-box cost with simultaneous perturbation stochastic
/// approximation.
///
/// `cost(params, stream)` receives a stream id so sampled objectives can use
/// common random numbers for the `±` pair of an iteration. Exact objectives
/// ignore it.
pub fn spsa_minimize<F>(cost: F, init: &[f64], cfg: &SpsaConfig) -> Result<TrainingRecord>
where
    F: Fn(&[f64], u64) -> f64 + Sync,
{
    cfg.validate()?;
    let n = init.len();
    let mut rng = rng::stream(cfg.seed, &[0x5b5a]);
    let mut evaluations = 0usize;
    let mut theta = init.to_vec();

    let f0 = cost(&theta, 0);
    evaluations += 1;
    let mut trace = vec![f0];
    if !f0.is_finite() {
        return Err(Error::NonFiniteCost { iteration: 0, trace });
    }

    let a = match cfg.a {
        Some(a) => a,
        None => {
            let (_, c0) = cfg.gains(1.0, 0);
            let samples = cfg.calibration_samples.max(1);
            let mut total = 0.0;
            for s in 0..samples {
                let delta = rademacher(n, &mut rng);
                let stream = 1u64 << 40 | s as u64;
                let (fp, fm) = rayon::join(
                    || cost(&shifted(&theta, &delta, c0), stream),
                    || cost(&shifted(&theta, &delta, -c0), stream),
                );
                evaluations += 2;
                total += (fp - fm).abs() / (2.0 * c0);
            }
            let magnitude = total / samples as f64;
            let scale = (1.0 + cfg.stability_constant()).powf(cfg.alpha);
            if magnitude > 0.0 && magnitude.is_finite() {
                cfg.target_step * scale / magnitude
            } else {
                cfg.target_step * scale
            }
        }
    };

    let mut best = (f0, theta.clone());
    let resamplings = cfg.resamplings as u64;
    for k in 0..cfg.max_iter {
        let (ak, ck) = cfg.gains(a, k);
        let base = (resamplings + 1) * k as u64 + 1;
        let mut gradient = vec![0.0; n];
        for r in 0..resamplings {
            let delta = rademacher(n, &mut rng);
            let (fp, fm) = rayon::join(
                || cost(&shifted(&theta, &delta, ck), base + r),
                || cost(&shifted(&theta, &delta, -ck), base + r),
            );
            evaluations += 2;
            if !(fp.is_finite() && fm.is_finite()) {
                return Err(Error::NonFiniteCost { iteration: k + 1, trace });
            }
            let g = (fp - fm) / (2.0 * ck * resamplings as f64);
            gradient.iter_mut().zip(&delta).for_each(|(gi, d)| *gi += g * d);
        }
        theta.iter_mut().zip(&gradient).for_each(|(t, g)| *t -= ak * g);

        let f = cost(&theta, base + resamplings);
        evaluations += 1;
        trace.push(f);
        if !f.is_finite() {
            return Err(Error::NonFiniteCost { iteration: k + 1, trace });
        }
        if f < best.0 {
            best = (f, theta.clone());
        }
    }

    Ok(TrainingRecord {
        final_params: best.1,
        cost_trace: trace,
        n_evaluations: evaluations,
        converged_cost: best.0,
        a,
    })
}

/// Uniform initial parameters in `[-π, π)`.
pub fn random_params(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, &[0x1417]);
    (0..n).map(|_| r.random_range(-PI..PI)).collect()
}

#[derive(Debug, Clone)]
pub struct VqeOutcome {
    pub record: TrainingRecord,
    pub state: StateVector,
    pub energy: f64,
}

/// Minimizes `<H>` over the VQE ansatz starting from `init` or a seeded
/// random point.
pub fn run_vqe(h: &PauliHamiltonian, cfg: &SpsaConfig, init: Option<&[f64]>) -> Result<VqeOutcome> {
    let ansatz = build_vqe_ansatz(h.n_qubits)?;
    let start = match init {
        Some(p) if p.len() != ansatz.n_params() => {
            return Err(Error::ParamMismatch { expected: ansatz.n_params(), got: p.len() })
        }
        Some(p) => p.to_vec(),
        None => random_params(ansatz.n_params(), cfg.seed),
    };
    let zero = StateVector::zero(h.n_qubits)?;
    let energy_of = |params: &[f64]| -> Result<f64> { energy_expectation(&run_circuit(&zero, &ansatz, params)?, h) };
    let record = spsa_minimize(|p, _| energy_of(p).unwrap_or(f64::NAN), &start, cfg)?;
    let state = run_circuit(&zero, &ansatz, &record.final_params)?;
    let energy = energy_expectation(&state, h)?;
    Ok(VqeOutcome { record, state, energy })
}

/// Trains the syndrome to minimize the mean cost over `states`.
pub fn train_syndrome(
    states: &[StateVector],
    trash: &[usize],
    cfg: &SpsaConfig,
    mode: &CostMode,
    init: Option<&[f64]>,
) -> Result<(Syndrome, TrainingRecord)> {
    let first = states.first().ok_or_else(|| Error::InvalidParam("no training states".into()))?;
    let l = first.n_qubits();
    if let Some(s) = states.iter().find(|s| s.n_qubits() != l) {
        return Err(Error::QubitMismatch { expected: l, got: s.n_qubits() });
    }
    let syndrome = Syndrome::new(l, trash)?;
    let start = match init {
        Some(p) if p.len() != syndrome.n_params() => {
            return Err(Error::ParamMismatch { expected: syndrome.n_params(), got: p.len() })
        }
        Some(p) => p.to_vec(),
        None => random_params(syndrome.n_params(), cfg.seed),
    };
    let mean_cost = |params: &[f64], stream: u64| -> f64 {
        let total: Result<f64> = states
            .iter()
            .enumerate()
            .map(|(i, s)| syndrome.cost(s, params, mode, rng::derive(stream, &[i as u64])))
            .sum();
        total.map(|t| t / states.len() as f64).unwrap_or(f64::NAN)
    };
    let record = spsa_minimize(mean_cost, &start, cfg)?;
    Ok((syndrome, record))
}

/// Persisted trained parameters, read back for warm starts and reuse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedParams {
    pub ansatz: AnsatzKind,
    #[serde(rename = "L")]
    pub sites: usize,
    pub trash: Vec<usize>,
    pub params: Vec<f64>,
    pub final_cost: f64,
    pub seed: u64,
    pub model: Option<Model>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Vqe,
    Syndrome,
}

impl TrainedParams {
    /// Rebuilds the circuit and checks the parameter count.
    pub fn circuit(&self) -> Result<ParamCircuit> {
        let circuit = match self.ansatz {
            AnsatzKind::Vqe => build_vqe_ansatz(self.sites)?,
            AnsatzKind::Syndrome => build_syndrome_circuit(self.sites, &self.trash)?.0,
        };
        if circuit.n_params() != self.params.len() {
            return Err(Error::ParamMismatch { expected: circuit.n_params(), got: self.params.len() });
        }
        Ok(circuit)
    }
}
