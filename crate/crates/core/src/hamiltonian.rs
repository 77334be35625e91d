//! Pauli-sum Hamiltonians.
//!
//! Two models are provided, both on 0-based sites:
//!
//! - the transverse/longitudinal field Ising chain
//!   `H = J Σ Z_i Z_{i+1} - g_x Σ X_i - g_z Σ Z_i`,
//! - the dimerized extended Bose-Hubbard chain in the hardcore limit, mapped
//!   to spins with `n = (1 - Z)/2` and `b†_i b_j + h.c. = (X_i X_j + Y_i Y_j)/2`.
//!
//! Physical formulas that carry a `(-1)^i` use the 1-based index `i = site + 1`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{expectation_pauli_string, site_mask, StateVector, MAX_STORED_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// `coefficient * ⊗ letters`, identity on sites not listed. An empty map is a
/// constant term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliString {
    #[serde(rename = "coeff")]
    pub coefficient: f64,
    #[serde(rename = "paulis")]
    pub letters: BTreeMap<usize, Pauli>,
}

impl PauliString {
    pub fn new(coefficient: f64, letters: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        Self { coefficient, letters: letters.into_iter().collect() }
    }

    pub fn constant(coefficient: f64) -> Self {
        Self::new(coefficient, [])
    }

    pub fn single(coefficient: f64, site: usize, p: Pauli) -> Self {
        Self::new(coefficient, [(site, p)])
    }

    pub fn pair(coefficient: f64, a: usize, pa: Pauli, b: usize, pb: Pauli) -> Self {
        Self::new(coefficient, [(a, pa), (b, pb)])
    }

    pub fn is_constant(&self) -> bool {
        self.letters.is_empty()
    }

    fn masks(&self, n_qubits: usize) -> TermMask {
        let (mut x, mut z, mut n_y) = (0usize, 0usize, 0u32);
        for (&site, &p) in &self.letters {
            let m = site_mask(n_qubits, site);
            match p {
                Pauli::X => x |= m,
                Pauli::Z => z |= m,
                Pauli::Y => {
                    x |= m;
                    z |= m;
                    n_y += 1;
                }
            }
        }
        TermMask { x, z, weight: Complex64::i().powu(n_y) * self.coefficient }
    }
}

/// Bit-mask form of a Pauli string: `P|i> = weight (-1)^{|i & z|} |i ^ x>`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TermMask {
    pub x: usize,
    pub z: usize,
    pub weight: Complex64,
}

impl TermMask {
    #[inline]
    pub(crate) fn act(&self, basis: usize) -> (usize, Complex64) {
        let sign = if (basis & self.z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        (basis ^ self.x, self.weight * sign)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliHamiltonian {
    pub n_qubits: usize,
    pub terms: Vec<PauliString>,
}

impl PauliHamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<PauliString>) -> Result<Self> {
        let h = Self { n_qubits, terms };
        h.validate()?;
        Ok(h)
    }

    /// Checks site ranges and finite coefficients (used after deserializing).
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_STORED_QUBITS {
            return Err(Error::QubitCount(self.n_qubits, MAX_STORED_QUBITS));
        }
        for t in &self.terms {
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidParam("non-finite term coefficient".into()));
            }
            if let Some(&site) = t.letters.keys().find(|&&s| s >= self.n_qubits) {
                return Err(Error::SiteOutOfRange { site, n_qubits: self.n_qubits });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub(crate) fn term_masks(&self) -> Vec<TermMask> {
        self.terms.iter().map(|t| t.masks(self.n_qubits)).collect()
    }

    /// `Σ |coeff|`, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// True when every term has an even number of `Y` letters, i.e. the
    /// matrix is real symmetric.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.letters.values().filter(|&&p| p == Pauli::Y).count() % 2 == 0)
    }

    /// `out = H · input` on the full space.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for mask in self.term_masks() {
            for (i, a) in input.iter().enumerate() {
                let (j, w) = mask.act(i);
                out[j] += w * a;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for mask in self.term_masks() {
            for i in 0..dim {
                let (j, w) = mask.act(i);
                m[(j, i)] += w;
            }
        }
        m
    }
}

/// `Σ coeff <P>`.
pub fn energy_expectation(state: &StateVector, h: &PauliHamiltonian) -> Result<f64> {
    if state.n_qubits() != h.n_qubits {
        return Err(Error::QubitMismatch { expected: h.n_qubits, got: state.n_qubits() });
    }
    h.terms.iter().map(|t| expectation_pauli_string(state, t)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlfiParams {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "J", default = "one")]
    pub coupling: f64,
    #[serde(default)]
    pub g_x: f64,
    #[serde(default)]
    pub g_z: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebhmParams {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "J", default = "one")]
    pub hopping: f64,
    #[serde(rename = "dJ", default)]
    pub dimerization: f64,
    #[serde(rename = "V", default)]
    pub repulsion: f64,
    /// Particle count; `None` means half filling.
    #[serde(default)]
    pub filling: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl TlfiParams {
    pub fn new(sites: usize, coupling: f64, g_x: f64, g_z: f64) -> Self {
        Self { sites, coupling, g_x, g_z, boundary: Boundary::Periodic }
    }

    pub fn open(mut self) -> Self {
        self.boundary = Boundary::Open;
        self
    }
}

impl DebhmParams {
    pub fn new(sites: usize, hopping: f64, dimerization: f64, repulsion: f64) -> Self {
        Self { sites, hopping, dimerization, repulsion, filling: None }
    }

    /// Resolved particle count.
    pub fn particles(&self) -> Result<usize> {
        match self.filling {
            Some(n) if n <= self.sites => Ok(n),
            Some(n) => Err(Error::InvalidParam(format!("filling {n} exceeds {} sites", self.sites))),
            None if self.sites.is_multiple_of(2) => Ok(self.sites / 2),
            None => Err(Error::InvalidParam(format!("half filling needs even L, got {}", self.sites))),
        }
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites < 2 {
        return Err(Error::InvalidParam(format!("chain needs L >= 2, got {sites}")));
    }
    if sites > MAX_STORED_QUBITS {
        return Err(Error::QubitCount(sites, MAX_STORED_QUBITS));
    }
    Ok(())
}

fn check_finite(values: &[(&str, f64)]) -> Result<()> {
    match values.iter().find(|(_, v)| !v.is_finite()) {
        Some((name, _)) => Err(Error::InvalidParam(format!("{name} must be finite"))),
        None => Ok(()),
    }
}

fn push_nonzero(terms: &mut Vec<PauliString>, term: PauliString) {
    if term.coefficient != 0.0 {
        terms.push(term);
    }
}

/// Ising chain with transverse and longitudinal fields.
pub fn build_tlfi(p: &TlfiParams) -> Result<PauliHamiltonian> {
    check_sites(p.sites)?;
    check_finite(&[("J", p.coupling), ("g_x", p.g_x), ("g_z", p.g_z)])?;
    let l = p.sites;
    let bonds = match p.boundary {
        Boundary::Periodic => l,
        Boundary::Open => l - 1,
    };
    let mut terms = Vec::new();
    for i in 0..bonds {
        push_nonzero(&mut terms, PauliString::pair(p.coupling, i, Pauli::Z, (i + 1) % l, Pauli::Z));
    }
    for i in 0..l {
        push_nonzero(&mut terms, PauliString::single(-p.g_x, i, Pauli::X));
    }
    for i in 0..l {
        push_nonzero(&mut terms, PauliString::single(-p.g_z, i, Pauli::Z));
    }
    PauliHamiltonian::new(l, terms)
}

/// Hopping amplitude `J + δJ (-1)^i` of the 1-based bond `i` (sites i, i+1).
pub fn debhm_bond_hopping(p: &DebhmParams, bond: usize) -> f64 {
    let sign = if bond.is_multiple_of(2) { 1.0 } else { -1.0 };
    p.hopping + p.dimerization * sign
}

/// Hardcore dimerized extended Bose-Hubbard chain (open boundary) as spins.
pub fn build_debhm_spin(p: &DebhmParams) -> Result<PauliHamiltonian> {
    check_sites(p.sites)?;
    check_finite(&[("J", p.hopping), ("dJ", p.dimerization), ("V", p.repulsion)])?;
    p.particles()?;
    let l = p.sites;
    let quarter_v = p.repulsion / 4.0;
    let mut terms = Vec::new();
    for bond in 1..l {
        let (a, b) = (bond - 1, bond);
        let t = -debhm_bond_hopping(p, bond) / 2.0;
        push_nonzero(&mut terms, PauliString::pair(t, a, Pauli::X, b, Pauli::X));
        push_nonzero(&mut terms, PauliString::pair(t, a, Pauli::Y, b, Pauli::Y));
        // V n_a n_b = V/4 (1 - Z_a - Z_b + Z_a Z_b)
        push_nonzero(&mut terms, PauliString::pair(quarter_v, a, Pauli::Z, b, Pauli::Z));
        push_nonzero(&mut terms, PauliString::single(-quarter_v, a, Pauli::Z));
        push_nonzero(&mut terms, PauliString::single(-quarter_v, b, Pauli::Z));
    }
    push_nonzero(&mut terms, PauliString::constant(quarter_v * (l - 1) as f64));
    PauliHamiltonian::new(l, terms)
}

/// A model family with its parameters; grid axes address fields by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Tlfi(TlfiParams),
    Debhm(DebhmParams),
}

impl Model {
    pub fn sites(&self) -> usize {
        match self {
            Model::Tlfi(p) => p.sites,
            Model::Debhm(p) => p.sites,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Tlfi(_) => "tlfi",
            Model::Debhm(_) => "debhm",
        }
    }

    pub fn hamiltonian(&self) -> Result<PauliHamiltonian> {
        match self {
            Model::Tlfi(p) => build_tlfi(p),
            Model::Debhm(p) => build_debhm_spin(p),
        }
    }

    /// Particle-number sector the ground state lives in, if conserved.
    pub fn sector(&self) -> Result<Option<usize>> {
        match self {
            Model::Tlfi(_) => Ok(None),
            Model::Debhm(p) => p.particles().map(Some),
        }
    }

    pub fn field_names(&self) -> &'static [&'static str] {
        match self {
            Model::Tlfi(_) => &["J", "g_x", "g_z"],
            Model::Debhm(_) => &["J", "dJ", "V"],
        }
    }

    pub fn field(&self, name: &str) -> Result<f64> {
        match (self, name) {
            (Model::Tlfi(p), "J") => Ok(p.coupling),
            (Model::Tlfi(p), "g_x") => Ok(p.g_x),
            (Model::Tlfi(p), "g_z") => Ok(p.g_z),
            (Model::Debhm(p), "J") => Ok(p.hopping),
            (Model::Debhm(p), "dJ") => Ok(p.dimerization),
            (Model::Debhm(p), "V") => Ok(p.repulsion),
            _ => Err(Error::UnknownAxis(name.to_string())),
        }
    }

    pub fn with_field(&self, name: &str, value: f64) -> Result<Model> {
        let mut m = self.clone();
        let slot = match (&mut m, name) {
            (Model::Tlfi(p), "J") => &mut p.coupling,
            (Model::Tlfi(p), "g_x") => &mut p.g_x,
            (Model::Tlfi(p), "g_z") => &mut p.g_z,
            (Model::Debhm(p), "J") => &mut p.hopping,
            (Model::Debhm(p), "dJ") => &mut p.dimerization,
            (Model::Debhm(p), "V") => &mut p.repulsion,
            _ => return Err(Error::UnknownAxis(name.to_string())),
        };
        *slot = value;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn dense_spectrum(h: &PauliHamiltonian) -> Vec<f64> {
        let m = h.to_dense();
        let eig = SymmetricEigen::new(m);
        let mut e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn number_operator(l: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(1 << l, 1 << l, |r, c| {
            if r == c {
                Complex64::new((r as u32).count_ones() as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn tlfi_term_counts() {
        let h = build_tlfi(&TlfiParams::new(3, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(h.terms.len(), 3);
        assert!(h
            .terms
            .iter()
            .all(|t| t.coefficient == 1.0 && t.letters.len() == 2 && t.letters.values().all(|&p| p == Pauli::Z)));

        let h = build_tlfi(&TlfiParams::new(5, 1.0, 0.5, 0.2)).unwrap();
        assert_eq!(h.terms.len(), 15);
        let open = build_tlfi(&TlfiParams::new(5, 1.0, 0.5, 0.2).open()).unwrap();
        assert_eq!(open.terms.len(), 14);
        assert!(build_tlfi(&TlfiParams::new(1, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn tlfi_neel_ground_states() {
        let h = build_tlfi(&TlfiParams::new(4, 1.0, 0.0, 0.0)).unwrap();
        let spec = dense_spectrum(&h);
        assert!((spec[0] + 4.0).abs() < 1e-12);
        assert!((spec[1] + 4.0).abs() < 1e-12);
        assert!(spec[2] > -4.0 + 1e-6);
        for neel in ["0101", "1010"] {
            let psi = StateVector::from_bitstring(neel).unwrap();
            assert!((energy_expectation(&psi, &h).unwrap() + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn debhm_two_site_examples() {
        let h = build_debhm_spin(&DebhmParams { filling: Some(1), ..DebhmParams::new(2, 1.0, 0.0, 0.0) }).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let psi = StateVector::from_real(&[0.0, s, s, 0.0], false).unwrap();
        assert!((energy_expectation(&psi, &h).unwrap() + 1.0).abs() < 1e-12);
        // the dense oracle agrees: lowest eigenvalue in the one-particle block is -1
        let m = h.to_dense();
        let block = DMatrix::from_fn(2, 2, |r, c| m[(r + 1, c + 1)]);
        let e = SymmetricEigen::new(block).eigenvalues;
        assert!((e.min() + 1.0).abs() < 1e-12);

        let h = build_debhm_spin(&DebhmParams::new(2, 0.0, 0.0, 2.0)).unwrap();
        let full = StateVector::from_bitstring("11").unwrap();
        assert!((energy_expectation(&full, &h).unwrap() - 2.0).abs() < 1e-12);
        let empty = StateVector::from_bitstring("00").unwrap();
        assert!(energy_expectation(&empty, &h).unwrap().abs() < 1e-12);
    }

    #[test]
    fn debhm_conserves_particle_number() {
        let h = build_debhm_spin(&DebhmParams::new(4, 1.0, 0.3, 1.7)).unwrap();
        let m = h.to_dense();
        let n = number_operator(4);
        let comm = &m * &n - &n * &m;
        assert!(comm.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn dimerization_alternates_from_first_bond() {
        let p = DebhmParams::new(6, 1.0, 0.4, 0.0);
        let hops: Vec<f64> = (1..6).map(|b| debhm_bond_hopping(&p, b)).collect();
        assert_eq!(hops, vec![0.6, 1.4, 0.6, 1.4, 0.6]);
        let h = build_debhm_spin(&p).unwrap();
        assert_eq!(h.terms[0].coefficient, -0.3);
        assert_eq!(h.terms[2].coefficient, -0.7);
    }

    #[test]
    fn half_filling_needs_even_chain() {
        assert!(build_debhm_spin(&DebhmParams::new(5, 1.0, 0.0, 0.0)).is_err());
        let p = DebhmParams { filling: Some(2), ..DebhmParams::new(5, 1.0, 0.0, 0.0) };
        assert!(build_debhm_spin(&p).is_ok());
    }

    #[test]
    fn energy_expectation_matches_dense_quadratic_form() {
        let h = build_debhm_spin(&DebhmParams::new(6, 1.0, -0.4, 2.5)).unwrap();
        let h2 = build_tlfi(&TlfiParams::new(6, 1.0, 0.7, 0.3)).unwrap();
        let amps: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new(((i * 37 % 17) as f64 - 8.0) / 9.0, ((i * 11 % 13) as f64 - 6.0) / 7.0))
            .collect();
        let psi = StateVector::from_amplitudes(amps, true).unwrap();
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        for ham in [&h, &h2] {
            let dense = (v.adjoint() * ham.to_dense() * &v)[(0, 0)];
            assert!((energy_expectation(&psi, ham).unwrap() - dense.re).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_hamiltonian_has_zero_energy() {
        let h = PauliHamiltonian::new(3, vec![]).unwrap();
        assert_eq!(energy_expectation(&StateVector::uniform(3).unwrap(), &h).unwrap(), 0.0);
        let psi = StateVector::zero(2).unwrap();
        assert!(energy_expectation(&psi, &h).is_err());
    }

    #[test]
    fn json_form() {
        let h = PauliHamiltonian::new(5, vec![PauliString::pair(1.5, 3, Pauli::Z, 4, Pauli::Z)]).unwrap();
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(text, r#"{"n_qubits":5,"terms":[{"coeff":1.5,"paulis":{"3":"Z","4":"Z"}}]}"#);
        let back: PauliHamiltonian = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
        let bad: PauliHamiltonian =
            serde_json::from_str(r#"{"n_qubits":2,"terms":[{"coeff":1,"paulis":{"2":"X"}}]}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn model_fields() {
        let m = Model::Debhm(DebhmParams::new(8, 1.0, 0.0, 0.0));
        let m2 = m.with_field("V", 3.0).unwrap();
        assert_eq!(m2.field("V").unwrap(), 3.0);
        assert!(matches!(m.with_field("g_x", 1.0), Err(Error::UnknownAxis(_))));
        assert_eq!(m.sector().unwrap(), Some(4));
        let t: Model = serde_json::from_str(r#"{"model":"tlfi","L":5,"g_x":0.3}"#).unwrap();
        assert_eq!(t, Model::Tlfi(TlfiParams::new(5, 1.0, 0.3, 0.0)));
    }
}
