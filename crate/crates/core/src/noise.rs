//! Gate and readout noise by Monte-Carlo trajectories, and readout-error
//! mitigation through an inverted calibration matrix.
//!
//! Depolarizing convention: with probability `p` a gate is followed by a
//! uniformly chosen non-identity Pauli on its targets (3 choices for one
//! qubit, 15 for two).
//!
//! Each shot has its own random streams derived from `(seed, shot)`. Shots
//! that draw the same error pattern share one simulated trajectory.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Pauli;
use crate::rng;
use crate::statevector::{format_bits, ParamCircuit, Sampler, ShotHistogram, StateVector};

const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    /// `[p(0→1), p(1→0)]` indexed by site. Sites past the end have no
    /// readout error.
    #[serde(default)]
    pub readout: Vec<[f64; 2]>,
}

impl NoiseModel {
    pub fn depolarizing(p1: f64, p2: f64) -> Self {
        Self { p1, p2, readout: Vec::new() }
    }

    /// Same symmetric flip probability on the first `n_qubits` sites.
    pub fn symmetric_readout(n_qubits: usize, p: f64) -> Self {
        Self { p1: 0.0, p2: 0.0, readout: vec![[p, p]; n_qubits] }
    }

    pub fn with_readout(mut self, readout: Vec<[f64; 2]>) -> Self {
        self.readout = readout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p1, self.p2].into_iter().chain(self.readout.iter().flatten().copied());
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParam(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn readout_for(&self, site: usize) -> [f64; 2] {
        self.readout.get(site).copied().unwrap_or([0.0, 0.0])
    }

    pub fn has_readout_error(&self) -> bool {
        self.readout.iter().flatten().any(|&p| p > 0.0)
    }

    fn flip<R: Rng>(&self, site: usize, bit: bool, rng: &mut R) -> bool {
        let [p01, p10] = self.readout_for(site);
        let p = if bit { p10 } else { p01 };
        if p > 0.0 && rng.random::<f64>() < p {
            !bit
        } else {
            bit
        }
    }
}

const PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

/// One injected error: after gate `gate`, `code` selects the Pauli(s).
/// For single-qubit gates `code` is 1..=3 (X, Y, Z); for two-qubit gates it
/// is `4a + b` over `{I, X, Y, Z}` with `(a, b) != (0, 0)`.
type ErrorPattern = Vec<(u32, u8)>;

fn draw_pattern<R: Rng>(circuit: &ParamCircuit, noise: &NoiseModel, rng: &mut R) -> ErrorPattern {
    let mut pattern = Vec::new();
    for (g, gate) in circuit.gates().iter().enumerate() {
        if gate.is_two_qubit() {
            if noise.p2 > 0.0 && rng.random::<f64>() < noise.p2 {
                pattern.push((g as u32, rng.random_range(1..16u8)));
            }
        } else if noise.p1 > 0.0 && rng.random::<f64>() < noise.p1 {
            pattern.push((g as u32, rng.random_range(1..4u8)));
        }
    }
    pattern
}

fn run_trajectory(initial: &StateVector, circuit: &ParamCircuit, params: &[f64], pattern: &[(u32, u8)]) -> StateVector {
    let mut state = initial.clone();
    let mut errors = pattern.iter().peekable();
    for (g, gate) in circuit.gates().iter().enumerate() {
        state.apply(gate, params);
        while let Some(&&(eg, code)) = errors.peek() {
            if eg as usize != g {
                break;
            }
            errors.next();
            let targets = gate.targets();
            if targets.len() == 1 {
                state.apply_pauli(targets[0], PAULIS[code as usize - 1]);
            } else {
                let (a, b) = (code / 4, code % 4);
                if a > 0 {
                    state.apply_pauli(targets[0], PAULIS[a as usize - 1]);
                }
                if b > 0 {
                    state.apply_pauli(targets[1], PAULIS[b as usize - 1]);
                }
            }
        }
    }
    state
}

/// Shot-by-shot noisy execution followed by measurement of `qubits`.
pub fn noisy_execute(
    initial: &StateVector,
    circuit: &ParamCircuit,
    params: &[f64],
    qubits: &[usize],
    n_shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ShotHistogram> {
    circuit.check_inputs(initial, params)?;
    initial.check_qubit_list(qubits)?;
    noise.validate()?;
    if n_shots == 0 {
        return Err(Error::InvalidParam("n_shots must be at least 1".into()));
    }

    let patterns: Vec<ErrorPattern> =
        (0..n_shots).into_par_iter().map(|s| draw_pattern(circuit, noise, &mut rng::stream(seed, &[s, 0]))).collect();

    let mut unique: HashMap<&ErrorPattern, usize> = HashMap::new();
    let mut distinct: Vec<&ErrorPattern> = Vec::new();
    let slot: Vec<usize> = patterns
        .iter()
        .map(|p| {
            *unique.entry(p).or_insert_with(|| {
                distinct.push(p);
                distinct.len() - 1
            })
        })
        .collect();

    let samplers = distinct
        .par_iter()
        .map(|p| {
            let state = run_trajectory(initial, circuit, params, p);
            Ok(Sampler::new(&state.marginal_probabilities(qubits)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let width = qubits.len();
    let mut counts = vec![0u64; 1 << width];
    for (s, &k) in slot.iter().enumerate() {
        let mut r = rng::stream(seed, &[s as u64, 1]);
        let ideal = samplers[k].draw(&mut r);
        let mut outcome = 0usize;
        for (pos, &site) in qubits.iter().enumerate() {
            let bit = ideal >> (width - 1 - pos) & 1 == 1;
            outcome = (outcome << 1) | usize::from(noise.flip(site, bit, &mut r));
        }
        counts[outcome] += 1;
    }
    Ok(ShotHistogram::from_outcomes(qubits.to_vec(), &counts))
}

/// Readout confusion matrix over the trash set. `matrix[i][j]` is the
/// probability of reading `i` when basis state `j` was prepared; bit order
/// follows `trash`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationMatrix {
    pub n_t: usize,
    pub trash: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
}

impl CalibrationMatrix {
    pub fn dim(&self) -> usize {
        1 << self.n_t
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.trash.len() != self.n_t || self.matrix.len() != d || self.matrix.iter().any(|r| r.len() != d) {
            return Err(Error::Format(format!("calibration matrix must be {d}x{d} for n_t = {}", self.n_t)));
        }
        for j in 0..d {
            let col: f64 = self.matrix.iter().map(|r| r[j]).sum();
            if (col - 1.0).abs() > 1e-9 || self.matrix.iter().any(|r| r[j] < 0.0) {
                return Err(Error::Format(format!("column {j} is not a probability distribution")));
            }
        }
        Ok(())
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.matrix[r][c])
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.to_dmatrix().singular_values();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            sv.max() / min
        }
    }
}

fn check_trash(trash: &[usize]) -> Result<()> {
    if trash.is_empty() || trash.len() > 10 {
        return Err(Error::InvalidParam(format!("calibration needs 1..=10 qubits, got {}", trash.len())));
    }
    let mut sorted = trash.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateSite(w[0]));
    }
    Ok(())
}

/// Empirical calibration: each basis state of the trash set is prepared
/// ideally and read out `n_shots` times under the readout error.
pub fn build_calibration_matrix(
    noise: &NoiseModel,
    trash: &[usize],
    n_shots: u64,
    seed: u64,
) -> Result<CalibrationMatrix> {
    noise.validate()?;
    check_trash(trash)?;
    if n_shots == 0 {
        return Err(Error::InvalidParam("n_shots must be at least 1".into()));
    }
    let n_t = trash.len();
    let d = 1usize << n_t;
    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut r = rng::stream(seed, &[j as u64, 0xca1]);
            let mut counts = vec![0u64; d];
            for _ in 0..n_shots {
                let mut outcome = 0usize;
                for (pos, &site) in trash.iter().enumerate() {
                    let bit = j >> (n_t - 1 - pos) & 1 == 1;
                    outcome = (outcome << 1) | usize::from(noise.flip(site, bit, &mut r));
                }
                counts[outcome] += 1;
            }
            counts.into_iter().map(|c| c as f64 / n_shots as f64).collect()
        })
        .collect();
    let matrix = (0..d).map(|i| (0..d).map(|j| columns[j][i]).collect()).collect();
    Ok(CalibrationMatrix { n_t, trash: trash.to_vec(), matrix })
}

/// Infinite-shot calibration: the product of per-qubit confusion matrices.
pub fn exact_calibration_matrix(noise: &NoiseModel, trash: &[usize]) -> Result<CalibrationMatrix> {
    noise.validate()?;
    check_trash(trash)?;
    let n_t = trash.len();
    let d = 1usize << n_t;
    let matrix = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    trash
                        .iter()
                        .enumerate()
                        .map(|(pos, &site)| {
                            let shift = n_t - 1 - pos;
                            let (read, prep) = (i >> shift & 1, j >> shift & 1);
                            let [p01, p10] = noise.readout_for(site);
                            match (prep, read) {
                                (0, 0) => 1.0 - p01,
                                (0, _) => p01,
                                (_, 1) => 1.0 - p10,
                                _ => p10,
                            }
                        })
                        .product()
                })
                .collect()
        })
        .collect();
    Ok(CalibrationMatrix { n_t, trash: trash.to_vec(), matrix })
}

/// Readout-corrected outcome distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigatedDistribution {
    pub measured_qubits: Vec<usize>,
    /// Indexed like [`StateVector::marginal_probabilities`].
    pub probabilities: Vec<f64>,
    pub quasi_counts: Vec<f64>,
    pub raw_frequencies: Vec<f64>,
    pub n_shots: u64,
}

impl MitigatedDistribution {
    pub fn probability(&self, key: &str) -> Result<f64> {
        Ok(self.probabilities[crate::statevector::parse_bits(key)?])
    }

    pub fn raw_probability(&self, key: &str) -> Result<f64> {
        Ok(self.raw_frequencies[crate::statevector::parse_bits(key)?])
    }

    /// Hamming-distance cost of the corrected distribution.
    pub fn cost(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(i, p)| p * i.count_ones() as f64).sum()
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.probabilities.len()).map(|i| format_bits(i, self.measured_qubits.len())).collect()
    }
}

/// Solves `cal · p = f` for the raw frequencies `f`, clips negative entries
/// and renormalizes.
pub fn mitigate_counts(raw: &ShotHistogram, cal: &CalibrationMatrix) -> Result<MitigatedDistribution> {
    cal.validate()?;
    if raw.measured_qubits != cal.trash {
        return Err(Error::InvalidParam(format!(
            "histogram measured {:?}, calibration covers {:?}",
            raw.measured_qubits, cal.trash
        )));
    }
    let freqs = raw.frequencies()?;
    let cond = cal.condition_number();
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::SingularCalibration(cond));
    }
    let m = cal.to_dmatrix();
    let f = nalgebra::DVector::from_column_slice(&freqs);
    let p = m.lu().solve(&f).ok_or(Error::SingularCalibration(f64::INFINITY))?;
    let mut probs: Vec<f64> = p.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= total);
    let quasi_counts = probs.iter().map(|x| x * raw.n_shots as f64).collect();
    Ok(MitigatedDistribution {
        measured_qubits: raw.measured_qubits.clone(),
        probabilities: probs,
        quasi_counts,
        raw_frequencies: freqs,
        n_shots: raw.n_shots,
    })
}
