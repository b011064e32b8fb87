use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("{n} qubits exceeds the configured maximum of {max}")]
    TooManyQubits { n: usize, max: usize },

    #[error("operator is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size underflow at t={t:.6e} (f={f:?}, gap={gap:?}, h={h:.3e})")]
    StepSizeUnderflow {
        t: f64,
        h: f64,
        f: Option<f64>,
        gap: Option<f64>,
    },

    #[error("integration exceeded {max_steps} steps at t={t:.6e}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("positivity violated at t={t:.6e}: minimum eigenvalue {min_eig:.3e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("trace drifted to {trace:.12} at t={t:.6e}")]
    TraceDrift { t: f64, trace: f64 },

    #[error("memory history spans {available:.3e} but {required:.3e} is required")]
    InsufficientHistory { available: f64, required: f64 },

    #[error("correlation function is not integrable: {0}")]
    NonIntegrableCorrelation(String),

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { min_eig: f64 },

    #[error("spectrum is (near-)degenerate: minimum gap {gap:.3e} below threshold {threshold:.3e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("states are (near-)parallel: overlap {overlap:.6}")]
    ParallelStates { overlap: f64 },

    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("schedule grid under-resolves the gap region: {0}")]
    UnderResolved(String),

    #[error("fit is under-determined: {0}")]
    UnderDetermined(String),

    #[error("history buffer exhausted: {needed} samples exceed the budget of {budget}")]
    HistoryExhausted { needed: usize, budget: usize },

    #[error("{0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
