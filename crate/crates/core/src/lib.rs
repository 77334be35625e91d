//! Variational quantum anomaly detection on a dense statevector simulator.
//!
//! The crate is organised the way the pipeline runs:
//!
//! - [`statevector`]: pure-state simulation of RY/CZ/Pauli circuits, shot
//!   sampling, Pauli expectations and Schmidt spectra.
//! - [`hamiltonian`]: Pauli-sum Hamiltonians for the transverse/longitudinal
//!   field Ising chain and the hardcore dimerized extended Bose-Hubbard chain.
//! - [`ground`]: exact ground states (dense or Lanczos, optionally restricted
//!   to a particle-number sector).
//! - [`variational`]: the VQE ansatz, the trash-qubit anomaly syndrome, the
//!   Hamming-distance cost and SPSA training.
//! - [`noise`]: depolarizing trajectories, readout error and readout
//!   mitigation.
//! - [`observables`]: staggered magnetization, CDW order parameter and
//!   entanglement-spectrum degeneracy.
//! - [`phasemap`]: grid sweeps, iterative phase discovery and warm-started
//!   VQE sweeps.
//! - [`checks`]: a quick runtime invariant suite.

pub mod checks;
pub mod error;
pub mod ground;
pub mod hamiltonian;
pub mod noise;
pub mod observables;
pub mod phasemap;
pub mod rng;
pub mod statevector;
pub mod variational;

pub use error::{Error, Result};
pub use hamiltonian::{Boundary, DebhmParams, Model, Pauli, PauliHamiltonian, PauliString, TlfiParams};
pub use statevector::{Angle, Gate, ParamCircuit, SchmidtSpectrum, ShotHistogram, StateVector};
