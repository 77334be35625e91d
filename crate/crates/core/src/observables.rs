//! Physical reference quantities for the two models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{schmidt_spectrum, SchmidtSpectrum, StateVector};

/// Per-site occupations `<n_i> = (1 - <Z_i>)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile(pub Vec<f64>);

impl DensityProfile {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn z_profile(state: &StateVector) -> Vec<f64> {
    let n = state.n_qubits();
    let mut z = vec![0.0; n];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (site, zs) in z.iter_mut().enumerate() {
            if i >> (n - 1 - site) & 1 == 0 {
                *zs += p;
            } else {
                *zs -= p;
            }
        }
    }
    z
}

/// `Σ_i (-1)^i <Z_i> / L` with 1-based `i`.
pub fn staggered_magnetization(state: &StateVector) -> f64 {
    let z = z_profile(state);
    let l = z.len() as f64;
    z.iter().enumerate().map(|(site, zs)| if (site + 1) % 2 == 0 { *zs } else { -*zs }).sum::<f64>() / l
}

pub fn site_densities(state: &StateVector) -> DensityProfile {
    DensityProfile(z_profile(state).into_iter().map(|z| (1.0 - z) / 2.0).collect())
}

/// Half-chain CDW order parameter `Σ_{i=1}^{L/2} (-1)^i (<n_i> - mean_filling)`.
pub fn cdw_order_parameter(profile: &DensityProfile, mean_filling: f64) -> Result<f64> {
    let l = profile.len();
    if l == 0 || !l.is_multiple_of(2) {
        return Err(Error::InvalidParam(format!("CDW order parameter needs even L, got {l}")));
    }
    Ok(profile.0[..l / 2]
        .iter()
        .enumerate()
        .map(|(site, n)| {
            let dn = n - mean_filling;
            if (site + 1) % 2 == 0 {
                dn
            } else {
                -dn
            }
        })
        .sum())
}

/// [`cdw_order_parameter`] with the mean taken from the profile itself.
pub fn cdw_order_parameter_default(profile: &DensityProfile) -> Result<f64> {
    let mean = profile.total() / profile.len().max(1) as f64;
    cdw_order_parameter(profile, mean)
}

/// `Σ_i (-1)^i α_i²` over the descending spectrum, `i` from 0.
pub fn es_degeneracy(spectrum: &SchmidtSpectrum) -> Result<f64> {
    if spectrum.squared_coefficients.is_empty() {
        return Err(Error::InvalidParam("empty Schmidt spectrum".into()));
    }
    let mut sorted = spectrum.squared_coefficients.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted.iter().enumerate().map(|(i, p)| if i % 2 == 0 { *p } else { -*p }).sum())
}

/// Bond index of the middle cut, `⌊L/2⌋`.
pub fn middle_cut(n_qubits: usize) -> usize {
    n_qubits / 2
}

/// Entanglement-spectrum degeneracy across the middle bond.
pub fn middle_es_degeneracy(state: &StateVector) -> Result<f64> {
    es_degeneracy(&schmidt_spectrum(state, middle_cut(state.n_qubits()))?)
}

/// One row of an observable sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub axis1: f64,
    pub axis2: f64,
    pub staggered: f64,
    /// `None` for odd chains.
    pub cdw: Option<f64>,
    pub es_degeneracy: f64,
    pub energy: f64,
}

pub fn observable_row(axis1: f64, axis2: f64, state: &StateVector, energy: f64) -> Result<ObservableRow> {
    let profile = site_densities(state);
    Ok(ObservableRow {
        axis1,
        axis2,
        staggered: staggered_magnetization(state),
        cdw: cdw_order_parameter_default(&profile).ok(),
        es_degeneracy: middle_es_degeneracy(state)?,
        energy,
    })
}

pub const OBSERVABLE_CSV_HEADER: &str = "axis1,axis2,S,O_CDW,D_ES,energy";

/// CSV with a fixed column order; an odd chain leaves `O_CDW` empty.
pub fn observables_csv(rows: &[ObservableRow]) -> String {
    let mut out = String::from(OBSERVABLE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cdw = r.cdw.map(|c| c.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{},{}\n", r.axis1, r.axis2, r.staggered, cdw, r.es_degeneracy, r.energy));
    }
    out
}
