//! Exact ground states, used as ideal input data for the syndrome and as the
//! reference for VQE.
//!
//! Small (sector) spaces are diagonalized densely; larger ones use Lanczos
//! with full reorthogonalization and restarts. The gap to the first excited
//! level comes from a second Lanczos run deflated against the ground state.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{energy_expectation, Model, Pauli, PauliHamiltonian, PauliString};
use crate::phasemap::GridSpec;
use crate::rng;
use crate::statevector::{StateVector, MAX_QUBITS, MAX_STORED_QUBITS};

/// Sector dimension at or below which the dense solver is used.
pub const DENSE_LIMIT: usize = 1024;

const SYMMETRY_FIELD: f64 = 1e-8;
/// Relative gap below which the lowest two levels count as one
/// symmetry-broken doublet.
const DOUBLET_GAP: f64 = 1e-3;
const LANCZOS_KRYLOV: usize = 60;
const LANCZOS_RESTARTS: usize = 200;
const LANCZOS_TOL: f64 = 1e-10;
const ACCEPT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundSolution {
    pub energy: f64,
    pub state: StateVector,
    pub sector: Option<usize>,
    /// `E1 - E0` within the searched space; `None` when it is one-dimensional.
    pub degeneracy_gap: Option<f64>,
}

/// Picks one of two near-degenerate ordered ground states: a weak staggered
/// pinning field, and when the lowest two levels still form a doublet, the
/// combination of the two with extremal staggered magnetization. Such a
/// state is only an eigenvector up to the doublet splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryBreak {
    #[default]
    None,
    /// Favour positive staggered magnetization.
    Plus,
    /// Favour negative staggered magnetization.
    Minus,
}

/// Lowest eigenpair of `h`, optionally restricted to basis states with
/// `sector` one-bits.
pub fn exact_ground_state(h: &PauliHamiltonian, sector: Option<usize>) -> Result<GroundSolution> {
    exact_ground_state_with(h, sector, SymmetryBreak::None)
}

pub fn exact_ground_state_with(
    h: &PauliHamiltonian,
    sector: Option<usize>,
    symmetry_break: SymmetryBreak,
) -> Result<GroundSolution> {
    h.validate()?;
    let n = h.n_qubits;
    match sector {
        None if n > MAX_QUBITS => {
            return Err(Error::SizeLimit(format!("full-space diagonalization needs L <= {MAX_QUBITS}, got {n}")))
        }
        Some(_) if n > MAX_STORED_QUBITS => {
            return Err(Error::SizeLimit(format!("sector diagonalization needs L <= {MAX_STORED_QUBITS}, got {n}")))
        }
        Some(k) if k > n => return Err(Error::EmptySector { filling: k, n_qubits: n }),
        _ => {}
    }

    let solve_h = match symmetry_break {
        SymmetryBreak::None => h.clone(),
        SymmetryBreak::Plus | SymmetryBreak::Minus => {
            let sign = if symmetry_break == SymmetryBreak::Plus { -1.0 } else { 1.0 };
            let mut pinned = h.clone();
            for site in 0..n {
                let stagger = if (site + 1) % 2 == 0 { 1.0 } else { -1.0 };
                pinned.terms.push(PauliString::single(sign * SYMMETRY_FIELD * stagger, site, Pauli::Z));
            }
            pinned
        }
    };

    let basis: Vec<usize> = match sector {
        Some(k) => (0..1usize << n).filter(|i| i.count_ones() as usize == k).collect(),
        None => (0..1usize << n).collect(),
    };
    let matrix = SectorMatrix::build(&solve_h, &basis, sector.is_some())?;

    let scale = solve_h.norm_bound().max(1.0);
    let (mut vector, next) =
        if basis.len() <= DENSE_LIMIT { matrix.dense_lowest() } else { matrix.lanczos_lowest(scale)? };
    let gap = next.as_ref().map(|n| n.0);
    let mut tolerance = 1e-6 * h.norm_bound().max(1.0);
    if let (Some((gap, v1)), true) = (&next, symmetry_break != SymmetryBreak::None) {
        if *gap <= DOUBLET_GAP * scale {
            vector = pick_sign(&basis, n, &vector, v1, symmetry_break);
            tolerance += gap;
        }
    }

    let mut full = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (k, &b) in basis.iter().enumerate() {
        full[b] = vector[k];
    }
    fix_phase(&mut full);
    let state = StateVector::from_amplitudes(full, true)?;
    let energy = energy_expectation(&state, h)?;
    let solution = GroundSolution { energy, state, sector, degeneracy_gap: gap };
    let res = residual(h, &solution);
    if res > tolerance {
        return Err(Error::NoConvergence(res));
    }
    Ok(solution)
}

/// Combination of the two lowest vectors with extremal staggered
/// magnetization, largest for `Plus`, smallest for `Minus`.
fn pick_sign(basis: &[usize], n: usize, v0: &[Complex64], v1: &[Complex64], sb: SymmetryBreak) -> Vec<Complex64> {
    let stagger: Vec<f64> = basis
        .iter()
        .map(|&b| {
            (0..n)
                .map(|site| {
                    let z = if b >> (n - 1 - site) & 1 == 0 { 1.0 } else { -1.0 };
                    if (site + 1) % 2 == 0 {
                        z
                    } else {
                        -z
                    }
                })
                .sum()
        })
        .collect();
    let element = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).zip(&stagger).map(|((a, b), s)| a.conj() * b * *s).sum()
    };
    let m = DMatrix::from_row_slice(2, 2, &[element(v0, v0), element(v0, v1), element(v1, v0), element(v1, v1)]);
    let eig = SymmetricEigen::new(m);
    let pick = if (eig.eigenvalues[0] > eig.eigenvalues[1]) == (sb == SymmetryBreak::Plus) { 0 } else { 1 };
    let (c0, c1) = (eig.eigenvectors[(0, pick)], eig.eigenvectors[(1, pick)]);
    v0.iter().zip(v1).map(|(a, b)| a * c0 + b * c1).collect()
}

/// Ground state of a model, restricted to its conserved sector if it has one.
pub fn model_ground_state(model: &Model, symmetry_break: SymmetryBreak) -> Result<GroundSolution> {
    exact_ground_state_with(&model.hamiltonian()?, model.sector()?, symmetry_break)
}

/// `‖H ψ - E ψ‖`.
pub fn residual(h: &PauliHamiltonian, sol: &GroundSolution) -> f64 {
    let psi = sol.state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    h.apply(psi, &mut out);
    out.iter().zip(psi).map(|(hp, p)| (hp - p * sol.energy).norm_sqr()).sum::<f64>().sqrt()
}

/// Makes the largest-magnitude amplitude real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let pivot =
        v.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())).unwrap_or(Complex64::new(1.0, 0.0));
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    v.iter_mut().for_each(|a| *a *= phase);
}

type Lowest = (Vec<Complex64>, Option<(f64, Vec<Complex64>)>);

/// Hamiltonian restricted to a basis subset, stored by columns.
struct SectorMatrix {
    columns: Vec<Vec<(usize, Complex64)>>,
    real: bool,
}

impl SectorMatrix {
    fn build(h: &PauliHamiltonian, basis: &[usize], is_sector: bool) -> Result<Self> {
        let lookup: HashMap<usize, usize> =
            if is_sector { basis.iter().enumerate().map(|(k, &b)| (b, k)).collect() } else { HashMap::new() };
        let masks = h.term_masks();
        let scale = h.norm_bound().max(1.0);
        let columns = basis
            .par_iter()
            .map(|&b| {
                let mut col: HashMap<usize, Complex64> = HashMap::new();
                for m in &masks {
                    let (j, w) = m.act(b);
                    *col.entry(j).or_default() += w;
                }
                let mut entries = Vec::with_capacity(col.len());
                for (j, w) in col {
                    if w.norm() <= 1e-14 * scale {
                        continue;
                    }
                    let row = if is_sector { *lookup.get(&j).ok_or(Error::NotNumberConserving)? } else { j };
                    entries.push((row, w));
                }
                entries.sort_by_key(|e| e.0);
                Ok(entries)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { columns, real: h.is_real() })
    }

    fn dim(&self) -> usize {
        self.columns.len()
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (col, xc) in self.columns.iter().zip(x) {
            if xc.re == 0.0 && xc.im == 0.0 {
                continue;
            }
            for &(row, w) in col {
                out[row] += w * xc;
            }
        }
    }

    /// Lowest eigenvector plus the gap and vector of the next level.
    fn dense_lowest(&self) -> Lowest {
        let d = self.dim();
        let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if self.real {
            let mut m = DMatrix::<f64>::zeros(d, d);
            for (c, col) in self.columns.iter().enumerate() {
                for &(r, w) in col {
                    m[(r, c)] = w.re;
                }
            }
            let eig = SymmetricEigen::new(m);
            (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
        } else {
            let mut m = DMatrix::<Complex64>::zeros(d, d);
            for (c, col) in self.columns.iter().enumerate() {
                for &(r, w) in col {
                    m[(r, c)] = w;
                }
            }
            let eig = SymmetricEigen::new(m);
            (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let column = |i: usize| vectors.column(i).iter().copied().collect::<Vec<_>>();
        let next = (order.len() > 1).then(|| (values[order[1]] - values[order[0]], column(order[1])));
        (column(order[0]), next)
    }

    fn lanczos_lowest(&self, scale: f64) -> Result<Lowest> {
        let (e0, v0) = self.lanczos(&[], scale, 1)?;
        let next = if self.dim() > 1 {
            let (e1, v1) = self.lanczos(std::slice::from_ref(&v0), scale, 2)?;
            Some(((e1 - e0).max(0.0), v1))
        } else {
            None
        };
        Ok((v0, next))
    }

    /// Lowest eigenpair in the orthogonal complement of `deflate`.
    fn lanczos(&self, deflate: &[Vec<Complex64>], scale: f64, seed: u64) -> Result<(f64, Vec<Complex64>)> {
        let d = self.dim();
        let mut rng = rng::stream(0x1a2c, &[seed, d as u64]);
        let mut start: Vec<Complex64> = (0..d)
            .map(|_| {
                let re = rng.random::<f64>() - 0.5;
                let im = if self.real { 0.0 } else { rng.random::<f64>() - 0.5 };
                Complex64::new(re, im)
            })
            .collect();
        let krylov = LANCZOS_KRYLOV.min(d - deflate.len());
        let mut best = (f64::INFINITY, f64::INFINITY, start.clone());
        let mut w = vec![Complex64::new(0.0, 0.0); d];
        for _ in 0..LANCZOS_RESTARTS {
            project_out(&mut start, deflate);
            normalize(&mut start);
            let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
            let mut alphas = Vec::with_capacity(krylov);
            let mut betas: Vec<f64> = Vec::with_capacity(krylov);
            for j in 0..krylov {
                self.apply(&basis[j], &mut w);
                project_out(&mut w, deflate);
                let alpha = dot(&basis[j], &w).re;
                alphas.push(alpha);
                // Full reorthogonalization, twice for stability.
                for _ in 0..2 {
                    for v in &basis {
                        let overlap = dot(v, &w);
                        w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= overlap * vi);
                    }
                }
                let beta = norm(&w);
                if j + 1 == krylov || beta <= 1e-12 * scale {
                    break;
                }
                betas.push(beta);
                basis.push(w.iter().map(|x| x / beta).collect());
            }
            let k = alphas.len();
            let t = DMatrix::from_fn(k, k, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c {
                    betas[r]
                } else if c + 1 == r {
                    betas[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (i0, _) = lowest_two(eig.eigenvalues.as_slice());
            let theta = eig.eigenvalues[i0];
            let y = eig.eigenvectors.column(i0);
            let mut ritz = vec![Complex64::new(0.0, 0.0); d];
            for (coef, v) in y.iter().zip(&basis) {
                ritz.iter_mut().zip(v).for_each(|(r, vi)| *r += vi * *coef);
            }
            project_out(&mut ritz, deflate);
            normalize(&mut ritz);
            self.apply(&ritz, &mut w);
            project_out(&mut w, deflate);
            let res = w.iter().zip(&ritz).map(|(hw, r)| (hw - r * theta).norm_sqr()).sum::<f64>().sqrt();
            if res < best.1 {
                best = (theta, res, ritz.clone());
            }
            if res <= LANCZOS_TOL * scale {
                break;
            }
            start = ritz;
        }
        let (theta, res, v) = best;
        if res > ACCEPT_TOL * scale {
            return Err(Error::NoConvergence(res));
        }
        Ok((theta, v))
    }
}

fn lowest_two(values: &[f64]) -> (usize, Option<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let gap = (order.len() > 1).then(|| values[order[1]] - values[order[0]]);
    (order[0], gap)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [Complex64]) {
    let n = norm(a);
    a.iter_mut().for_each(|x| *x /= n);
}

fn project_out(w: &mut [Complex64], deflate: &[Vec<Complex64>]) {
    for v in deflate {
        let overlap = dot(v, w);
        w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= overlap * vi);
    }
}

/// Ground states over a grid, stored row-major (`axis1` outer).
#[derive(Debug, Clone)]
pub struct GroundGrid {
    pub grid: GridSpec,
    pub solutions: Vec<GroundSolution>,
}

impl GroundGrid {
    pub fn get(&self, i: usize, j: usize) -> &GroundSolution {
        &self.solutions[self.grid.flat_index(i, j)]
    }

    /// Lookup by coordinate values.
    pub fn at(&self, a1: f64, a2: f64) -> Result<&GroundSolution> {
        let (i, j) = self.grid.locate(a1, a2)?;
        Ok(self.get(i, j))
    }
}

/// One exact ground state per grid point; points are independent.
pub fn grid_ground_states(grid: &GridSpec, symmetry_break: SymmetryBreak) -> Result<GroundGrid> {
    grid.validate()?;
    let solutions = grid
        .points()
        .into_par_iter()
        .map(|pt| model_ground_state(&grid.model_at(pt.i, pt.j)?, symmetry_break))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundGrid { grid: grid.clone(), solutions })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundIndexEntry {
    i: usize,
    j: usize,
    axis1: f64,
    axis2: f64,
    file: String,
    energy: f64,
    gap: Option<f64>,
    sector: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundIndex {
    grid: GridSpec,
    points: Vec<GroundIndexEntry>,
}

/// Writes one binary state file per point plus `index.json`.
pub fn save_ground_grid(dir: &Path, grid: &GroundGrid) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut points = Vec::with_capacity(grid.solutions.len());
    for pt in grid.grid.points() {
        let sol = grid.get(pt.i, pt.j);
        let file = format!("state_{:03}_{:03}.bin", pt.i, pt.j);
        let mut bytes = Vec::new();
        sol.state.write_binary(&mut bytes)?;
        fs::write(dir.join(&file), bytes)?;
        points.push(GroundIndexEntry {
            i: pt.i,
            j: pt.j,
            axis1: pt.a1,
            axis2: pt.a2,
            file,
            energy: sol.energy,
            gap: sol.degeneracy_gap,
            sector: sol.sector,
        });
    }
    let index = GroundIndex { grid: grid.grid.clone(), points };
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)?)?;
    Ok(())
}

pub fn load_ground_grid(dir: &Path) -> Result<GroundGrid> {
    let index: GroundIndex = serde_json::from_str(&fs::read_to_string(dir.join("index.json"))?)?;
    index.grid.validate()?;
    let mut solutions: Vec<Option<GroundSolution>> = vec![None; index.grid.len()];
    for e in index.points {
        if e.i >= index.grid.axis1.values.len() || e.j >= index.grid.axis2.values.len() {
            return Err(Error::Format(format!("index entry ({}, {}) outside grid", e.i, e.j)));
        }
        let state = StateVector::read_binary(fs::File::open(dir.join(&e.file))?)?;
        solutions[index.grid.flat_index(e.i, e.j)] =
            Some(GroundSolution { energy: e.energy, state, sector: e.sector, degeneracy_gap: e.gap });
    }
    let solutions = solutions
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Format("index does not cover every grid point".into()))?;
    Ok(GroundGrid { grid: index.grid, solutions })
}
