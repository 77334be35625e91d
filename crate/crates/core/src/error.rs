use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid qubit count {0}: must be between 1 and {1}")]
    QubitCount(usize, usize),

    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitMismatch { expected: usize, got: usize },

    #[error("parameter length mismatch: circuit has {expected} parameters, got {got}")]
    ParamMismatch { expected: usize, got: usize },

    #[error("site {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("duplicate site {0}")]
    DuplicateSite(usize),

    #[error("invalid dimension {0}: not a power of two")]
    Dimension(usize),

    #[error("state norm {0} deviates from 1 beyond tolerance")]
    Norm(f64),

    #[error("invalid bond cut {cut} for {n_qubits} qubits")]
    Cut { cut: usize, n_qubits: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("histogram has no shots")]
    EmptyHistogram,

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("particle sector with {filling} particles on {n_qubits} sites is empty")]
    EmptySector { filling: usize, n_qubits: usize },

    #[error("Hamiltonian does not conserve particle number")]
    NotNumberConserving,

    #[error("eigensolver did not converge: residual {0:e}")]
    NoConvergence(f64),

    #[error("non-finite cost at iteration {iteration}")]
    NonFiniteCost { iteration: usize, trace: Vec<f64> },

    #[error("calibration matrix is ill-conditioned (condition number {0:e}); collect more calibration shots")]
    SingularCalibration(f64),

    #[error("unknown grid axis `{0}`")]
    UnknownAxis(String),

    #[error("point ({0}, {1}) is not on the grid")]
    OffGrid(f64, f64),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
