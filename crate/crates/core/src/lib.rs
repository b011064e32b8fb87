//! Simulation library for environment-induced Zeno freezing in adiabatic
//! (Grover-type) quantum search.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`] dense complex linear algebra, Pauli operators, spectra and
//!   state functionals shared by everything else.
//! * [`grover`] the adiabatic search Hamiltonian, its two-level reductions and
//!   the constant-speed / gap-adaptive schedules.
//! * [`dynamics`] master-equation generators (Lindblad, coarse-grained,
//!   Redfield, singular coupling) and the trajectory integrator.
//! * [`bloch`] the two-level analytic laboratory.
//! * [`caldeira`] the damped, frequency-driven oscillator with exponential
//!   memory kernel.
//! * [`perturbation`] first/second order system-bath perturbation theory and the
//!   exact joint system + bath-qubit oracle.
//! * [`experiments`] orchestration of the headline experiments, configuration
//!   and file output.

pub mod bloch;
pub mod caldeira;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grover;
pub mod integrate;
pub mod perturbation;
pub mod quantum;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::{Tolerances, TOL};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
