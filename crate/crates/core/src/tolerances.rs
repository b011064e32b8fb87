//! Numerical tolerances used across the crate, kept in one record.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Relative Frobenius deviation allowed for `H == H†`.
    pub hermitian: f64,
    /// Allowed deviation of `Tr ρ` from one.
    pub trace: f64,
    /// Most negative eigenvalue accepted in a density matrix.
    pub positivity: f64,
    /// Eigenvalues below this floor are dropped from `-p ln p`.
    pub entropy_floor: f64,
    /// Relative reconstruction error of an eigendecomposition.
    pub reconstruction: f64,
    /// Imaginary parts of expectation values below this are discarded.
    pub imaginary: f64,
    /// Positivity violation that aborts a trajectory.
    pub positivity_abort: f64,
    /// Trace drift tolerated in recorded trajectories.
    pub trajectory_trace: f64,
    /// Negative eigenvalue tolerance of a bath γ matrix.
    pub psd: f64,
    /// Relative spectral gap below which an observable counts as degenerate.
    pub degeneracy: f64,
    /// Largest |<in|out>| accepted by the two-state projection.
    pub max_overlap: f64,
}

pub const TOL: Tolerances = Tolerances {
    hermitian: 1e-12,
    trace: 1e-10,
    positivity: 1e-10,
    entropy_floor: 1e-14,
    reconstruction: 1e-10,
    imaginary: 1e-10,
    positivity_abort: 1e-8,
    trajectory_trace: 1e-8,
    psd: 1e-10,
    degeneracy: 1e-6,
    max_overlap: 0.99,
};

/// Largest supported qubit count (Hilbert-space dimension 16384).
pub const MAX_QUBITS: usize = 14;

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}
