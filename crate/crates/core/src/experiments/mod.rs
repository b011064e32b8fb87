//! Experiment orchestration: configuration, sweeps and run-directory output.

mod config;
mod output;
mod runners;
mod scaling;
mod spectrum;
mod zeno;

pub use config::{
    apply_override, load_config, parse_config, Backend, BlochConfig, ExperimentConfig, ExperimentKind,
    OscillatorConfig, PerturbationConfig, ScheduleConfig, SweepConfig,
};
pub use output::{write_csv_rows, Manifest, RunDirectory};
pub use runners::{
    bloch_eigenvalue_sweep, run_bloch, run_evolve, run_oscillator, run_perturbation, run_schedule,
    BlochSweepRow, PerturbationRow,
};
pub use scaling::{
    mixing_time, run_runtime_scaling, runtime_for_success, subspace_lindblad, MixingPoint, RuntimePoint,
    ScalingFit, ScalingReport,
};
pub use spectrum::{run_spectrum, SpectrumReport, SpectrumRow};
pub use zeno::{run_zeno_grover, ZenoPoint, ZenoReport};

use crate::error::Result;

/// Dispatches on `config.experiment`, writing into `dir`.
pub fn run(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    match config.experiment {
        ExperimentKind::Spectrum => spectrum::write(config, dir),
        ExperimentKind::Schedule => runners::write_schedule(config, dir),
        ExperimentKind::Evolve => runners::write_evolve(config, dir),
        ExperimentKind::Bloch => runners::write_bloch(config, dir),
        ExperimentKind::Oscillator => runners::write_oscillator(config, dir),
        ExperimentKind::ZenoSweep => zeno::write(config, dir),
        ExperimentKind::Scaling => scaling::write(config, dir),
        ExperimentKind::Perturbation => runners::write_perturbation(config, dir),
    }
}
