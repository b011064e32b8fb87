//! Master-equation generators and the common trajectory integrator.

mod bath;
mod coarse;
mod evolve;
mod lindblad;
mod operator;
mod redfield;
mod singular;

pub use bath::{BathModel, CorrelationKind, Spatial};
pub use coarse::{
    coarse_grained_evolve, coarse_grained_step, grover_step_propagator, CoarseOptions, CoarseStep,
    StepPropagator,
};
pub use evolve::{evolve, evolve_pure, Drive, EvolveOptions, Record, Trajectory};
pub(crate) use evolve::{fmt_f64, Recorder};
pub use lindblad::{grover_operator, lindblad_rhs, HamiltonianModel, LindbladGenerator};
pub use operator::Operator;
pub use redfield::{
    redfield_evolve, redfield_rhs, redfield_short_memory_rate, RedfieldHistory, RedfieldOptions,
    ShortMemoryRate,
};
pub use singular::{singular_coupling_generator, CorrelationTable, SingularCoupling};

use crate::error::Result;
use crate::quantum::{CMatrix, CVector};

/// A time-local generator `dρ/dt = 𝓛_{t,f}(ρ)`.
pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;

    /// System Hamiltonian at interpolation parameter `f`.
    fn hamiltonian(&self, f: f64) -> Result<Operator>;

    fn rhs(&self, t: f64, f: f64, rho: &CMatrix) -> Result<CMatrix>;

    /// Instantaneous ground and first excited states.
    fn levels(&self, f: f64) -> Result<(CVector, CVector)> {
        lindblad::dense_levels(&self.hamiltonian(f)?)
    }

    /// Instantaneous gap, when cheaply known (used in diagnostics).
    fn gap(&self, _f: f64) -> Option<f64> {
        None
    }
}
