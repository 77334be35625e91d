//! Runtime invariant suite, small enough to run from the command line.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::ground::{exact_ground_state, exact_ground_state_with, SymmetryBreak};
use crate::hamiltonian::{build_debhm_spin, build_tlfi, DebhmParams, PauliHamiltonian, TlfiParams};
use crate::noise::{build_calibration_matrix, NoiseModel};
use crate::rng;
use crate::statevector::{run_circuit, sample_measurements, StateVector};
use crate::variational::{
    build_syndrome_circuit, build_vqe_ansatz, cost_from_counts, cost_from_expectations, random_params, spsa_minimize,
    SpsaConfig,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn record(name: &'static str, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn random_state(n: usize, r: &mut impl Rng) -> Result<StateVector> {
    let amps = (0..1usize << n).map(|_| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).collect();
    StateVector::from_amplitudes(amps, true)
}

fn norm_preservation(seed: u64) -> Result<(bool, String)> {
    let mut r = rng::stream(seed, &[1]);
    let mut worst = 0.0f64;
    for l in 2..=8 {
        let psi = random_state(l, &mut r)?;
        let n_t = l.ilog2() as usize;
        let (syn, _) = build_syndrome_circuit(l, &(0..n_t).collect::<Vec<_>>())?;
        for (circuit, k) in [(build_vqe_ansatz(l)?, 0u64), (syn, 1)] {
            let out =
                run_circuit(&psi, &circuit, &random_params(circuit.n_params(), rng::derive(seed, &[l as u64, k])))?;
            worst = worst.max((out.norm() - 1.0).abs());
        }
    }
    Ok((worst < 1e-12, format!("max |norm - 1| = {worst:.2e}")))
}

fn hermiticity() -> Result<(bool, String)> {
    let hs: Vec<PauliHamiltonian> = vec![
        build_tlfi(&TlfiParams::new(5, 1.0, 0.7, 0.3))?,
        build_tlfi(&TlfiParams::new(4, 0.5, 1.2, -0.4).open())?,
        build_debhm_spin(&DebhmParams::new(6, 1.0, 0.4, 2.0))?,
    ];
    let mut worst = 0.0f64;
    for h in &hs {
        let m = h.to_dense();
        worst = worst.max((&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok((worst < 1e-14, format!("max |H - H†| = {worst:.2e}")))
}

fn sector_conservation() -> Result<(bool, String)> {
    let h = build_debhm_spin(&DebhmParams::new(6, 1.0, -0.3, 1.5))?;
    let dim = 1usize << 6;
    let mut leak = 0.0f64;
    let mut out = vec![Complex64::default(); dim];
    for b in 0..dim {
        let mut e = vec![Complex64::default(); dim];
        e[b] = Complex64::new(1.0, 0.0);
        h.apply(&e, &mut out);
        for (k, a) in out.iter().enumerate() {
            if k.count_ones() != b.count_ones() {
                leak = leak.max(a.norm());
            }
        }
    }
    let sol = exact_ground_state(&h, Some(3))?;
    let outside: f64 =
        sol.state.amplitudes().iter().enumerate().filter(|(k, _)| k.count_ones() != 3).map(|(_, a)| a.norm_sqr()).sum();
    Ok((
        leak == 0.0 && outside == 0.0,
        format!("max off-sector element {leak:.1e}, ground-state leakage {outside:.1e}"),
    ))
}

fn schedule_completeness() -> Result<(bool, String)> {
    let mut checked = 0;
    for l in 2..=16 {
        for n_t in 1..l {
            let trash: Vec<usize> = (l - n_t..l).collect();
            let (c, spec) = build_syndrome_circuit(l, &trash)?;
            spec.validate()?;
            if c.n_params() != n_t * l + n_t {
                return Ok((false, format!("L={l}, n_t={n_t}: {} parameters", c.n_params())));
            }
            checked += 1;
        }
    }
    Ok((true, format!("{checked} (L, n_t) schedules valid")))
}

fn spsa_determinism(seed: u64) -> Result<(bool, String)> {
    let cfg = SpsaConfig::default().with_iters(40).with_seed(seed);
    let f = |p: &[f64], _: u64| p.iter().enumerate().map(|(i, x)| (x - i as f64 * 0.1).powi(2)).sum::<f64>();
    let a = spsa_minimize(f, &[0.5, -0.5, 0.2], &cfg)?;
    let b = spsa_minimize(f, &[0.5, -0.5, 0.2], &cfg)?;
    let best = a.cost_trace.iter().copied().fold(f64::INFINITY, f64::min);
    let same = a.cost_trace == b.cost_trace && a.final_params == b.final_params;
    Ok((same && a.converged_cost == best, format!("identical traces: {same}")))
}

fn calibration_stochastic(seed: u64) -> Result<(bool, String)> {
    let noise = NoiseModel::depolarizing(0.0, 0.0).with_readout(vec![[0.02, 0.05], [0.1, 0.03], [0.0, 0.2]]);
    let cal = build_calibration_matrix(&noise, &[0, 1, 2], 2000, seed)?;
    let dim = cal.dim();
    let worst = (0..dim).map(|j| ((0..dim).map(|i| cal.matrix[i][j]).sum::<f64>() - 1.0).abs()).fold(0.0f64, f64::max);
    let nonneg = cal.matrix.iter().flatten().all(|x| *x >= 0.0);
    Ok((worst < 1e-12 && nonneg, format!("max |column sum - 1| = {worst:.1e}")))
}

fn hamming_identity(seed: u64) -> Result<(bool, String)> {
    let mut r = rng::stream(seed, &[2]);
    let mut inside = 0;
    let trials = 20;
    for t in 0..trials {
        let psi = random_state(6, &mut r)?;
        let trash = [r.random_range(0..3), r.random_range(3..6)];
        let exact = cost_from_expectations(&psi, &trash)?;
        let hist = sample_measurements(&psi, &trash, 10_000, rng::derive(seed, &[3, t]))?;
        let sampled = cost_from_counts(&hist)?;
        if !(0.0..=2.0).contains(&exact) {
            return Ok((false, format!("cost {exact} outside [0, 2]")));
        }
        if (sampled - exact).abs() <= 3.0 * (2.0f64 / 4.0 / 10_000.0).sqrt() {
            inside += 1;
        }
    }
    Ok((inside >= trials - 2, format!("{inside}/{trials} within 3 sigma")))
}

fn variational_bound(seed: u64) -> Result<(bool, String)> {
    let h = build_tlfi(&TlfiParams::new(5, 1.0, 0.6, 0.2))?;
    let e0 = exact_ground_state_with(&h, None, SymmetryBreak::None)?.energy;
    let ansatz = build_vqe_ansatz(5)?;
    let zero = StateVector::zero(5)?;
    let mut lowest = f64::INFINITY;
    for k in 0..50 {
        let psi = run_circuit(&zero, &ansatz, &random_params(10, rng::derive(seed, &[4, k])))?;
        lowest = lowest.min(crate::hamiltonian::energy_expectation(&psi, &h)?);
    }
    Ok((lowest >= e0 - 1e-8, format!("min sampled energy {lowest:.6} vs ground {e0:.6}")))
}

/// Runs every check and reports each outcome.
pub fn run_invariant_suite(seed: u64) -> Vec<CheckResult> {
    vec![
        record("norm preservation", norm_preservation(seed)),
        record("hermiticity", hermiticity()),
        record("sector conservation", sector_conservation()),
        record("schedule completeness", schedule_completeness()),
        record("spsa determinism", spsa_determinism(seed)),
        record("calibration column stochasticity", calibration_stochastic(seed)),
        record("hamming cost identity", hamming_identity(seed)),
        record("variational bound", variational_bound(seed)),
    ]
}
