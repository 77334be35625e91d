//! Dense pure-state simulation.
//!
//! Sites are 0-based. Site 0 is the most significant bit of a basis-state
//! label, so `StateVector::from_bitstring("10101")` reads left to right as
//! sites 0..5. `Z|0> = +|0>` and `Z|1> = -|1>`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Pauli, PauliString};
use crate::rng;

/// Largest register any circuit may act on.
pub const MAX_QUBITS: usize = 16;

/// Largest register a stored state may have. Sector-restricted ground states
/// are embedded back into the full space and may exceed [`MAX_QUBITS`].
pub const MAX_STORED_QUBITS: usize = 20;

const NORM_TOL: f64 = 1e-8;
const SCHMIDT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

#[inline]
pub(crate) fn site_mask(n_qubits: usize, site: usize) -> usize {
    1 << (n_qubits - 1 - site)
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_stored_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParam(format!("basis index {index} >= {dim}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Basis state from a `0`/`1` label, site 0 first.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let index = parse_bits(bits)?;
        Self::basis(bits.len(), index)
    }

    /// Equal superposition of all basis states.
    pub fn uniform(n_qubits: usize) -> Result<Self> {
        check_stored_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self { n_qubits, amplitudes: vec![a; dim] })
    }

    /// Wraps raw amplitudes, checking the dimension and the norm.
    ///
    /// Without `renormalize` the norm must already be within `1e-8` of one
    /// and the amplitudes are kept bit for bit.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, renormalize: bool) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Dimension(dim));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_stored_qubits(n_qubits)?;
        let norm = norm_of(&amplitudes);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Norm(norm));
        }
        if !renormalize && (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Norm(norm));
        }
        let mut state = Self { n_qubits, amplitudes };
        if renormalize {
            state.scale(1.0 / norm);
        }
        Ok(state)
    }

    /// Real amplitudes, normalized.
    pub fn from_real(amplitudes: &[f64], renormalize: bool) -> Result<Self> {
        Self::from_amplitudes(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect(), renormalize)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_size(other.n_qubits)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_qubits {
            return Err(Error::SiteOutOfRange { site, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    fn check_same_size(&self, n_qubits: usize) -> Result<()> {
        if self.n_qubits != n_qubits {
            return Err(Error::QubitMismatch { expected: self.n_qubits, got: n_qubits });
        }
        Ok(())
    }

    fn scale(&mut self, factor: f64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    /// Applies one gate with a resolved angle. Targets are assumed valid.
    pub(crate) fn apply(&mut self, gate: &Gate, params: &[f64]) {
        let n = self.n_qubits;
        match *gate {
            Gate::Ry { target, angle } => self.apply_ry(target, angle.resolve(params)),
            Gate::Cz(a, b) => {
                let mask = site_mask(n, a) | site_mask(n, b);
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            Gate::X(t) => self.apply_pauli(t, Pauli::X),
            Gate::Y(t) => self.apply_pauli(t, Pauli::Y),
            Gate::Z(t) => self.apply_pauli(t, Pauli::Z),
        }
    }

    fn apply_ry(&mut self, target: usize, theta: f64) {
        let mask = site_mask(self.n_qubits, target);
        let (s, c) = (theta / 2.0).sin_cos();
        let amps = &mut self.amplitudes;
        // Visit each (bit=0, bit=1) pair once by walking blocks of 2*mask.
        for block in (0..amps.len()).step_by(2 * mask) {
            for i0 in block..block + mask {
                let i1 = i0 | mask;
                let a0 = amps[i0];
                let a1 = amps[i1];
                amps[i0] = a0 * c - a1 * s;
                amps[i1] = a0 * s + a1 * c;
            }
        }
    }

    pub(crate) fn apply_pauli(&mut self, target: usize, pauli: Pauli) {
        let mask = site_mask(self.n_qubits, target);
        let amps = &mut self.amplitudes;
        match pauli {
            Pauli::Z => {
                for (i, a) in amps.iter_mut().enumerate() {
                    if i & mask != 0 {
                        *a = -*a;
                    }
                }
            }
            Pauli::X => {
                for i0 in (0..amps.len()).filter(|i| i & mask == 0) {
                    amps.swap(i0, i0 | mask);
                }
            }
            Pauli::Y => {
                // Y|0> = i|1>, Y|1> = -i|0>
                let i_unit = Complex64::new(0.0, 1.0);
                for i0 in (0..amps.len()).filter(|i| i & mask == 0) {
                    let i1 = i0 | mask;
                    let a0 = amps[i0];
                    let a1 = amps[i1];
                    amps[i0] = -i_unit * a1;
                    amps[i1] = i_unit * a0;
                }
            }
        }
    }

    /// `<Z_site>`.
    pub fn expectation_z(&self, site: usize) -> Result<f64> {
        self.check_site(site)?;
        let mask = site_mask(self.n_qubits, site);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// Born distribution of the marginal on `qubits`; outcome index has
    /// `qubits[0]` as its most significant bit.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_qubit_list(qubits)?;
        let masks: Vec<usize> = qubits.iter().map(|&q| site_mask(self.n_qubits, q)).collect();
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            probs[outcome_index(i, &masks)] += p;
        }
        Ok(probs)
    }

    pub(crate) fn check_qubit_list(&self, qubits: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.n_qubits];
        for &q in qubits {
            self.check_site(q)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::DuplicateSite(q));
            }
        }
        Ok(())
    }

    /// Binary form: little-endian `u32` qubit count, then interleaved
    /// little-endian `f64` (re, im) pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        for a in &self.amplitudes {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let n_qubits = u32::from_le_bytes(word) as usize;
        check_stored_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut bytes = vec![0u8; dim * 16];
        r.read_exact(&mut bytes)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after state amplitudes".into()));
        }
        let amplitudes = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(amplitudes, false)
    }

    pub fn to_json(&self) -> StateJson {
        StateJson { n_qubits: self.n_qubits, amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect() }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let state =
            Self::from_amplitudes(json.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect(), false)?;
        if state.n_qubits != json.n_qubits {
            return Err(Error::Format(format!(
                "n_qubits {} disagrees with {} amplitudes",
                json.n_qubits,
                json.amplitudes.len()
            )));
        }
        Ok(state)
    }
}

/// JSON form of a state: `{"n_qubits": L, "amplitudes": [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub n_qubits: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

fn check_stored_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_STORED_QUBITS {
        return Err(Error::QubitCount(n, MAX_STORED_QUBITS));
    }
    Ok(())
}

fn norm_of(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

#[inline]
fn outcome_index(basis: usize, masks: &[usize]) -> usize {
    masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(basis & m != 0))
}

pub(crate) fn parse_bits(bits: &str) -> Result<usize> {
    if bits.is_empty() || bits.len() > MAX_STORED_QUBITS {
        return Err(Error::Format(format!("bad bitstring length {}", bits.len())));
    }
    bits.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::Format(format!("bitstring `{bits}` has a character other than 0/1"))),
    })
}

pub(crate) fn format_bits(index: usize, width: usize) -> String {
    (0..width).rev().map(|b| if index >> b & 1 == 1 { '1' } else { '0' }).collect()
}

/// An RY rotation angle: a constant or a slot in the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    Fixed(f64),
    Param(usize),
}

impl Angle {
    #[inline]
    fn resolve(self, params: &[f64]) -> f64 {
        match self {
            Angle::Fixed(x) => x,
            Angle::Param(k) => params[k],
        }
    }
}

/// Gate set: `RY(θ) = exp(-iθY/2)`, `CZ`, and the three Paulis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Ry { target: usize, angle: Angle },
    Cz(usize, usize),
    X(usize),
    Y(usize),
    Z(usize),
}

impl Gate {
    pub fn ry(target: usize, slot: usize) -> Self {
        Gate::Ry { target, angle: Angle::Param(slot) }
    }

    pub fn ry_fixed(target: usize, theta: f64) -> Self {
        Gate::Ry { target, angle: Angle::Fixed(theta) }
    }

    pub fn targets(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { target, .. } | Gate::X(target) | Gate::Y(target) | Gate::Z(target) => vec![target],
            Gate::Cz(a, b) => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cz(..))
    }
}

/// Ordered gate program with parameter slots `0..n_params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl ParamCircuit {
    /// Validates targets and that every slot below `n_params` is used.
    pub fn new(n_qubits: usize, gates: Vec<Gate>, n_params: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits, MAX_QUBITS));
        }
        let mut used = vec![false; n_params];
        for gate in &gates {
            for t in gate.targets() {
                if t >= n_qubits {
                    return Err(Error::SiteOutOfRange { site: t, n_qubits });
                }
            }
            match *gate {
                Gate::Cz(a, b) if a == b => {
                    return Err(Error::Circuit(format!("CZ with identical targets {a}")));
                }
                Gate::Ry { angle: Angle::Param(k), .. } => {
                    if k >= n_params {
                        return Err(Error::Circuit(format!("slot {k} >= n_params {n_params}")));
                    }
                    used[k] = true;
                }
                Gate::Ry { angle: Angle::Fixed(x), .. } if !x.is_finite() => {
                    return Err(Error::Circuit("non-finite fixed angle".into()));
                }
                _ => {}
            }
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(Error::Circuit(format!("parameter slot {k} is never referenced")));
        }
        Ok(Self { n_qubits, gates, n_params })
    }

    pub fn empty(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Vec::new(), 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn count_two_qubit(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub(crate) fn check_inputs(&self, state: &StateVector, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::ParamMismatch { expected: self.n_params, got: params.len() });
        }
        if state.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch { expected: self.n_qubits, got: state.n_qubits });
        }
        Ok(())
    }
}

/// Runs `circuit` on a copy of `initial`.
pub fn run_circuit(initial: &StateVector, circuit: &ParamCircuit, params: &[f64]) -> Result<StateVector> {
    circuit.check_inputs(initial, params)?;
    let mut state = initial.clone();
    for gate in &circuit.gates {
        state.apply(gate, params);
    }
    Ok(state)
}

/// Bitstring counts. Key character `k` is the outcome of `measured_qubits[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotHistogram {
    pub measured_qubits: Vec<usize>,
    pub counts: BTreeMap<String, u64>,
    pub n_shots: u64,
}

impl ShotHistogram {
    pub(crate) fn from_outcomes(measured_qubits: Vec<usize>, outcome_counts: &[u64]) -> Self {
        let width = measured_qubits.len();
        let counts = outcome_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (format_bits(i, width), c))
            .collect();
        Self { measured_qubits, counts, n_shots: outcome_counts.iter().sum() }
    }

    /// Checks the key widths and that the counts add up to `n_shots`.
    pub fn validate(&self) -> Result<()> {
        let width = self.measured_qubits.len();
        for key in self.counts.keys() {
            if key.len() != width {
                return Err(Error::Format(format!("key `{key}` does not have {width} bits")));
            }
            parse_bits(key)?;
        }
        let total: u64 = self.counts.values().sum();
        if total != self.n_shots {
            return Err(Error::Format(format!("counts sum to {total}, n_shots is {}", self.n_shots)));
        }
        Ok(())
    }

    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Dense count vector indexed like [`StateVector::marginal_probabilities`].
    pub fn dense_counts(&self) -> Result<Vec<u64>> {
        self.validate()?;
        let mut dense = vec![0u64; 1 << self.measured_qubits.len()];
        for (k, &c) in &self.counts {
            dense[parse_bits(k)?] += c;
        }
        Ok(dense)
    }

    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.n_shots == 0 {
            return Err(Error::EmptyHistogram);
        }
        let n = self.n_shots as f64;
        Ok(self.dense_counts()?.into_iter().map(|c| c as f64 / n).collect())
    }
}

/// Cumulative distribution for repeated inverse-CDF draws.
pub(crate) struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// Draws `n_shots` outcomes of `qubits` from the Born rule.
pub fn sample_measurements(state: &StateVector, qubits: &[usize], n_shots: u64, seed: u64) -> Result<ShotHistogram> {
    if n_shots == 0 {
        return Err(Error::InvalidParam("n_shots must be at least 1".into()));
    }
    let probs = state.marginal_probabilities(qubits)?;
    let sampler = Sampler::new(&probs);
    let mut rng = rng::stream(seed, &[0x5a3b]);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n_shots {
        counts[sampler.draw(&mut rng)] += 1;
    }
    Ok(ShotHistogram::from_outcomes(qubits.to_vec(), &counts))
}

/// `<psi|P|psi>` including the string's coefficient.
pub fn expectation_pauli_string(state: &StateVector, pauli: &PauliString) -> Result<f64> {
    let n = state.n_qubits;
    let (mut x_mask, mut z_mask, mut n_y) = (0usize, 0usize, 0u32);
    for (&site, &p) in &pauli.letters {
        state.check_site(site)?;
        let m = site_mask(n, site);
        match p {
            Pauli::X => x_mask |= m,
            Pauli::Z => z_mask |= m,
            Pauli::Y => {
                x_mask |= m;
                z_mask |= m;
                n_y += 1;
            }
        }
    }
    let amps = &state.amplitudes;
    // P|i> = i^{nY} (-1)^{popcount(i & z_mask)} |i ^ x_mask>
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let term = amps[i ^ x_mask].conj() * a;
        if (i & z_mask).count_ones() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let phase = Complex64::i().powu(n_y);
    let value = phase * acc * pauli.coefficient;
    debug_assert!(value.im.abs() <= 1e-10 * pauli.coefficient.abs().max(1.0));
    Ok(value.re)
}

/// Squared Schmidt coefficients across the bond after site `cut - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub squared_coefficients: Vec<f64>,
    pub cut_position: usize,
}

impl SchmidtSpectrum {
    /// Entanglement spectrum `λ_i = -ln α_i²`.
    pub fn entanglement_energies(&self) -> Vec<f64> {
        self.squared_coefficients.iter().map(|p| -p.ln()).collect()
    }

    pub fn entropy(&self) -> f64 {
        -self.squared_coefficients.iter().map(|p| p * p.ln()).sum::<f64>()
    }
}

/// Schmidt decomposition between the first `cut` sites and the rest.
pub fn schmidt_spectrum(state: &StateVector, cut: usize) -> Result<SchmidtSpectrum> {
    let n = state.n_qubits;
    if cut == 0 || cut >= n {
        return Err(Error::Cut { cut, n_qubits: n });
    }
    let rows = 1usize << cut;
    let cols = 1usize << (n - cut);
    // Row-major reshape: row index = leading `cut` sites.
    let m = DMatrix::from_fn(rows, cols, |r, c| state.amplitudes[r * cols + c]);
    let singular = m.singular_values();
    let mut squared: Vec<f64> = singular.iter().map(|s| s * s).filter(|&p| p > SCHMIDT_CUTOFF).collect();
    squared.sort_by(|a, b| b.total_cmp(a));
    Ok(SchmidtSpectrum { squared_coefficients: squared, cut_position: cut })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> StateVector {
        let s = 1.0 / 2f64.sqrt();
        StateVector::from_real(&[s, 0.0, 0.0, s], false).unwrap()
    }

    fn plus() -> StateVector {
        let s = 1.0 / 2f64.sqrt();
        StateVector::from_real(&[s, s], false).unwrap()
    }

    /// Dense 2x2 RY, I, CZ products as an independent oracle.
    fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a.kronecker(b)
    }

    fn ry_matrix(theta: f64) -> DMatrix<Complex64> {
        let (s, co) = (theta / 2.0).sin_cos();
        DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
    }

    #[test]
    fn empty_circuit_is_identity() {
        let psi = StateVector::zero(2).unwrap();
        let out = run_circuit(&psi, &ParamCircuit::empty(2).unwrap(), &[]).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn ry_pi_flips_zero() {
        let circ = ParamCircuit::new(1, vec![Gate::ry(0, 0)], 1).unwrap();
        let out = run_circuit(&StateVector::zero(1).unwrap(), &circ, &[PI]).unwrap();
        assert!((out.amplitude(1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(out.amplitude(0).norm() < 1e-15);
    }

    #[test]
    fn ry_ry_cz_matches_dense_product() {
        let circ = ParamCircuit::new(2, vec![Gate::ry(0, 0), Gate::ry(1, 1), Gate::Cz(0, 1)], 2).unwrap();
        let out = run_circuit(&StateVector::zero(2).unwrap(), &circ, &[PI / 2.0, PI / 2.0]).unwrap();

        let ry = ry_matrix(PI / 2.0);
        let mut cz = DMatrix::<Complex64>::identity(4, 4);
        cz[(3, 3)] = c(-1.0, 0.0);
        let u = cz * kron(&ry, &ry);
        let oracle = u.column(0).clone_owned();
        for i in 0..4 {
            assert!((out.amplitude(i) - oracle[i]).norm() < 1e-12);
        }
        // (|00> + |01> + |10> - |11>) / 2
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (i, e) in expected.iter().enumerate() {
            assert!((out.amplitude(i) - c(*e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn run_circuit_rejects_mismatches() {
        let circ = ParamCircuit::new(2, vec![Gate::ry(0, 0)], 1).unwrap();
        let psi = StateVector::zero(2).unwrap();
        assert!(matches!(run_circuit(&psi, &circ, &[]), Err(Error::ParamMismatch { .. })));
        let psi3 = StateVector::zero(3).unwrap();
        assert!(matches!(run_circuit(&psi3, &circ, &[0.1]), Err(Error::QubitMismatch { .. })));
    }

    #[test]
    fn circuit_validation() {
        assert!(ParamCircuit::new(2, vec![Gate::ry(2, 0)], 1).is_err());
        assert!(ParamCircuit::new(2, vec![Gate::ry(0, 1)], 1).is_err());
        assert!(ParamCircuit::new(2, vec![Gate::ry(0, 0)], 2).is_err());
        assert!(ParamCircuit::new(2, vec![Gate::Cz(1, 1)], 0).is_err());
    }

    #[test]
    fn pauli_gates_act_as_matrices() {
        let mut psi = StateVector::zero(1).unwrap();
        psi.apply_pauli(0, Pauli::Y);
        assert!((psi.amplitude(1) - c(0.0, 1.0)).norm() < 1e-15);
        psi.apply_pauli(0, Pauli::Y);
        assert!((psi.amplitude(0) - c(1.0, 0.0)).norm() < 1e-15);
        psi.apply_pauli(0, Pauli::X);
        psi.apply_pauli(0, Pauli::Z);
        assert!((psi.amplitude(1) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn deterministic_sampling() {
        let psi = StateVector::from_bitstring("10").unwrap();
        let h = sample_measurements(&psi, &[0, 1], 1000, 3).unwrap();
        assert_eq!(h.counts.len(), 1);
        assert_eq!(h.count("10"), 1000);
        // Reordered qubits reorder the key.
        let h = sample_measurements(&psi, &[1, 0], 10, 3).unwrap();
        assert_eq!(h.count("01"), 10);
    }

    #[test]
    fn plus_state_sampling_within_binomial_bound() {
        let h = sample_measurements(&plus(), &[0], 10_000, 11).unwrap();
        let f = h.count("1") as f64 / 10_000.0;
        assert!((f - 0.5).abs() <= 3.0 * (0.25f64 / 10_000.0).sqrt(), "{f}");
    }

    #[test]
    fn bell_sampling_never_hits_zero_amplitudes() {
        let h = sample_measurements(&bell(), &[0, 1], 5000, 1).unwrap();
        assert!(h.counts.keys().all(|k| k == "00" || k == "11"));
        assert_eq!(h.n_shots, 5000);
        h.validate().unwrap();
    }

    #[test]
    fn sampling_is_seeded() {
        let psi = StateVector::uniform(3).unwrap();
        let a = sample_measurements(&psi, &[0, 2], 500, 9).unwrap();
        let b = sample_measurements(&psi, &[0, 2], 500, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_rejects_bad_qubits() {
        let psi = StateVector::zero(2).unwrap();
        assert!(matches!(sample_measurements(&psi, &[0, 0], 10, 1), Err(Error::DuplicateSite(0))));
        assert!(matches!(sample_measurements(&psi, &[2], 10, 1), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn pauli_expectations() {
        let z = PauliString::single(1.0, 0, Pauli::Z);
        assert_eq!(expectation_pauli_string(&StateVector::zero(1).unwrap(), &z).unwrap(), 1.0);
        let x = PauliString::single(1.0, 0, Pauli::X);
        assert!((expectation_pauli_string(&plus(), &x).unwrap() - 1.0).abs() < 1e-12);
        let zz = PauliString::pair(1.0, 0, Pauli::Z, 1, Pauli::Z);
        assert!((expectation_pauli_string(&bell(), &zz).unwrap() - 1.0).abs() < 1e-12);
        let yy = PauliString::pair(1.0, 0, Pauli::Y, 1, Pauli::Y);
        // <Bell|YY|Bell> = -1
        assert!((expectation_pauli_string(&bell(), &yy).unwrap() + 1.0).abs() < 1e-12);
        let bad = PauliString::single(1.0, 3, Pauli::Z);
        assert!(expectation_pauli_string(&bell(), &bad).is_err());
    }

    #[test]
    fn y_expectation_on_complex_state() {
        // (|0> + i|1>)/sqrt2 is the +1 eigenstate of Y.
        let s = 1.0 / 2f64.sqrt();
        let psi = StateVector::from_amplitudes(vec![c(s, 0.0), c(0.0, s)], false).unwrap();
        let y = PauliString::single(2.0, 0, Pauli::Y);
        assert!((expectation_pauli_string(&psi, &y).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_examples() {
        let product = StateVector::from_bitstring("01").unwrap();
        assert_eq!(schmidt_spectrum(&product, 1).unwrap().squared_coefficients, vec![1.0]);
        let s = schmidt_spectrum(&bell(), 1).unwrap().squared_coefficients;
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|p| (p - 0.5).abs() < 1e-12));
        assert!(matches!(schmidt_spectrum(&bell(), 2), Err(Error::Cut { .. })));
        assert!(matches!(schmidt_spectrum(&bell(), 0), Err(Error::Cut { .. })));
    }

    #[test]
    fn schmidt_of_three_qubit_state_is_normalized() {
        let amps = [0.1, -0.3, 0.2, 0.5, 0.7, -0.1, 0.05, 0.3];
        let psi = StateVector::from_real(&amps, true).unwrap();
        let spec = schmidt_spectrum(&psi, 2).unwrap();
        let total: f64 = spec.squared_coefficients.iter().sum();
        assert!((total - 1.0).abs() < 1e-8);
        assert!(spec.squared_coefficients.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn inject_state() {
        let mut e0 = vec![c(0.0, 0.0); 8];
        e0[0] = c(1.0, 0.0);
        let psi = StateVector::from_amplitudes(e0, false).unwrap();
        assert_eq!(psi, StateVector::zero(3).unwrap());
        assert!(matches!(StateVector::from_amplitudes(vec![c(1.0, 0.0); 6], true), Err(Error::Dimension(6))));
        assert!(matches!(StateVector::from_real(&[1.0, 1.0], false), Err(Error::Norm(_))));
        let psi = StateVector::from_real(&[1.0, 1.0], true).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binary_and_json_forms_round_trip() {
        let psi = StateVector::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)], false).unwrap();
        let mut bytes = Vec::new();
        psi.write_binary(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 2 * 16);
        assert_eq!(&bytes[..4], &1u32.to_le_bytes());
        assert_eq!(StateVector::read_binary(bytes.as_slice()).unwrap(), psi);

        let text = serde_json::to_string(&psi.to_json()).unwrap();
        assert_eq!(text, r#"{"n_qubits":1,"amplitudes":[[0.6,0.0],[0.0,0.8]]}"#);
        let back: StateJson = serde_json::from_str(&text).unwrap();
        assert_eq!(StateVector::from_json(&back).unwrap(), psi);
    }

    #[test]
    fn bitstring_helpers() {
        assert_eq!(parse_bits("101").unwrap(), 5);
        assert_eq!(format_bits(5, 4), "0101");
        assert!(parse_bits("10a").is_err());
    }
}
