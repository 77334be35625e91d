use num_complex::Complex64;
use proptest::prelude::*;

use vqad::ground::exact_ground_state;
use vqad::hamiltonian::{build_debhm_spin, build_tlfi, DebhmParams, PauliHamiltonian, TlfiParams};
use vqad::noise::{build_calibration_matrix, exact_calibration_matrix, NoiseModel};
use vqad::statevector::{run_circuit, StateVector};
use vqad::variational::{
    build_syndrome_circuit, build_vqe_ansatz, cost_from_expectations, random_params, spsa_minimize, SpsaConfig,
};

fn state_from(re: &[f64], im: &[f64]) -> StateVector {
    let amps = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
    StateVector::from_amplitudes(amps, true).unwrap()
}

fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
    let d = 1usize << n;
    (prop::collection::vec(-1.0f64..1.0, d), prop::collection::vec(-1.0f64..1.0, d))
        .prop_filter("non-zero", |(re, im)| re.iter().chain(im).any(|x| x.abs() > 1e-3))
        .prop_map(|(re, im)| state_from(&re, &im))
}

fn arb_trash(l: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..l).prop_flat_map(move |n_t| prop::sample::subsequence((0..l).collect::<Vec<_>>(), n_t))
}

fn max_asymmetry(h: &PauliHamiltonian) -> f64 {
    let m = h.to_dense();
    (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn circuits_preserve_norm(l in 2usize..7, seed in any::<u64>(), trash_seed in any::<u64>()) {
        let psi = StateVector::uniform(l).unwrap();
        let n_t = 1 + (trash_seed as usize) % (l - 1);
        let trash: Vec<usize> = (0..n_t).collect();
        let (syn, _) = build_syndrome_circuit(l, &trash).unwrap();
        for c in [build_vqe_ansatz(l).unwrap(), syn] {
            let out = run_circuit(&psi, &c, &random_params(c.n_params(), seed)).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_states_keep_norm_through_syndrome(psi in arb_state(5), seed in any::<u64>()) {
        let (c, _) = build_syndrome_circuit(5, &[1, 3]).unwrap();
        let out = run_circuit(&psi, &c, &random_params(c.n_params(), seed)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tlfi_is_hermitian(l in 2usize..7, j in -2.0f64..2.0, gx in -2.0f64..2.0, gz in -2.0f64..2.0, open in any::<bool>()) {
        let mut p = TlfiParams::new(l, j, gx, gz);
        if open {
            p = p.open();
        }
        prop_assert!(max_asymmetry(&build_tlfi(&p).unwrap()) < 1e-14);
    }

    #[test]
    fn debhm_is_hermitian_and_conserves_particles(half in 1usize..4, dj in -0.95f64..0.95, v in 0.0f64..5.0) {
        let l = 2 * half;
        let h = build_debhm_spin(&DebhmParams::new(l, 1.0, dj, v)).unwrap();
        prop_assert!(max_asymmetry(&h) < 1e-14);
        let m = h.to_dense();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if (r as u32).count_ones() != (c as u32).count_ones() {
                    prop_assert_eq!(m[(r, c)], Complex64::new(0.0, 0.0));
                }
            }
        }
        let sol = exact_ground_state(&h, Some(half)).unwrap();
        let leak: f64 = sol.state.amplitudes().iter().enumerate()
            .filter(|(k, _)| k.count_ones() as usize != half)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        prop_assert_eq!(leak, 0.0);
    }

    #[test]
    fn syndrome_schedule_is_complete((l, trash) in (2usize..=16).prop_flat_map(|l| (Just(l), arb_trash(l)))) {
        let (c, spec) = build_syndrome_circuit(l, &trash).unwrap();
        prop_assert!(spec.validate().is_ok());
        let n_t = trash.len();
        prop_assert_eq!(c.n_params(), n_t * l + n_t);
        // Every non-trash qubit meets every trash qubit once.
        let mut met = std::collections::HashSet::new();
        for layer in &spec.layers {
            for &(a, b) in &layer.cross {
                prop_assert!(met.insert((a, b)));
            }
        }
        prop_assert_eq!(met.len(), n_t * (l - n_t));
    }

    #[test]
    fn spsa_is_reproducible(seed in any::<u64>(), x0 in prop::collection::vec(-2.0f64..2.0, 1..5)) {
        let cfg = SpsaConfig::default().with_iters(25).with_seed(seed);
        let f = |p: &[f64], _: u64| p.iter().map(|x| (x - 0.3).powi(2)).sum::<f64>();
        let a = spsa_minimize(f, &x0, &cfg).unwrap();
        let b = spsa_minimize(f, &x0, &cfg).unwrap();
        prop_assert_eq!(&a.cost_trace, &b.cost_trace);
        prop_assert_eq!(&a.final_params, &b.final_params);
        let best = a.cost_trace.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(a.converged_cost, best);
    }

    #[test]
    fn calibration_is_column_stochastic(
        flips in prop::collection::vec((0.0f64..0.3, 0.0f64..0.3), 3),
        seed in any::<u64>(),
    ) {
        let noise = NoiseModel::default().with_readout(flips.iter().map(|(a, b)| [*a, *b]).collect());
        for cal in [
            build_calibration_matrix(&noise, &[0, 1, 2], 500, seed).unwrap(),
            exact_calibration_matrix(&noise, &[0, 2]).unwrap(),
        ] {
            let d = cal.dim();
            for j in 0..d {
                let col: f64 = (0..d).map(|i| cal.matrix[i][j]).sum();
                prop_assert!((col - 1.0).abs() < 1e-12);
                prop_assert!((0..d).all(|i| cal.matrix[i][j] >= 0.0));
            }
        }
    }

    #[test]
    fn hamming_cost_is_bounded_by_trash_count(psi in arb_state(4), trash in arb_trash(4)) {
        let c = cost_from_expectations(&psi, &trash).unwrap();
        prop_assert!(c >= -1e-12 && c <= trash.len() as f64 + 1e-12);
    }
}
