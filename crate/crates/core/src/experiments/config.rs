use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bloch::BlochVariant;
use crate::dynamics::BathModel;
use crate::error::{Error, Result};
use crate::grover::{schedule_adaptive, schedule_constant, GroverProblem, Schedule, ScheduleKind};
use crate::tolerances::MAX_QUBITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Schedule,
    Evolve,
    Bloch,
    Oscillator,
    ZenoSweep,
    Scaling,
    Perturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Lindblad,
    Coarse,
    Redfield,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    /// Adiabaticity parameter of the adaptive schedule.
    pub epsilon: f64,
    /// Run-time of the constant schedule.
    pub total_time: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            kind: ScheduleKind::Adaptive,
            epsilon: 0.1,
            total_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n: Vec<usize>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub total_time: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlochConfig {
    pub variant: BlochVariant,
    /// Log grid of `Γ/Ω` for the eigenvalue sweep.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub points: usize,
    /// Random `(ρ, L)` pairs for the entropy-production table.
    pub entropy_samples: usize,
    /// Measurement counts for the projective Zeno table (total angle π/2).
    pub measurements: Vec<u32>,
}

impl Default for BlochConfig {
    fn default() -> Self {
        BlochConfig {
            variant: BlochVariant::DephasingZ {
                omega: 1.0,
                gamma: 1.0,
            },
            ratio_min: 1e-2,
            ratio_max: 1e3,
            points: 40,
            entropy_samples: 200,
            measurements: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorConfig {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub mass: f64,
    /// `dΩ/dt`; non-zero selects a linear frequency ramp.
    pub ramp_rate: f64,
    pub x0: f64,
    pub p0: f64,
    /// In units of `1/Ω`.
    pub horizon: f64,
    pub samples: usize,
    /// Also run the memory-kernel solver and report the deviation.
    pub kernel: bool,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        OscillatorConfig {
            alpha: 10.0,
            beta: 5.0,
            omega: 1.0,
            mass: 1.0,
            ramp_rate: 0.0,
            x0: 1.0,
            p0: 0.0,
            horizon: 50.0,
            samples: 500,
            kernel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    /// Splittings of the explicit bath spins (one per bath qubit).
    pub splittings: Vec<f64>,
    /// Time step shared by the oracle and the estimate.
    pub step: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            splittings: vec![0.7, 0.9],
            step: 0.01,
        }
    }
}

/// Everything one experiment needs; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Database size for reduced-model runs when it is not `2^n`.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_bath")]
    pub bath: BathModel,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    /// Rate of the `√Γ|w⟩⟨w|` channel.
    #[serde(default)]
    pub gamma: f64,
    /// Adds `√Γ|s⟩⟨s|` at the same rate.
    #[serde(default)]
    pub uniform_channel: bool,
    /// Window of the coarse-grained backend (default `T/400`).
    #[serde(default)]
    pub coarse_dt: Option<f64>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_f_points")]
    pub f_points: usize,
    #[serde(default = "default_records")]
    pub records: usize,
    #[serde(default = "default_success")]
    pub success_threshold: f64,
    /// Trace distance to `𝟙/2` in the Landau–Zener sector counted as mixed.
    #[serde(default = "default_mixing")]
    pub mixing_threshold: f64,
    /// Frozen interpolation parameter of the mixing-time runs.
    #[serde(default = "half")]
    pub mixing_f: f64,
    #[serde(default)]
    pub bloch: BlochConfig,
    #[serde(default)]
    pub oscillator: OscillatorConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub seed: u64,
    /// Cap on the number of trajectories a sweep may request.
    #[serde(default = "default_budget")]
    pub max_trajectories: usize,
}

fn default_n() -> usize {
    4
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_bath() -> BathModel {
    BathModel::exponential(0.1, 0.1, 1.0, 0.0).expect("valid default bath")
}
fn default_backend() -> Backend {
    Backend::Lindblad
}
fn default_f_points() -> usize {
    201
}
fn default_records() -> usize {
    200
}
fn default_success() -> f64 {
    0.99
}
fn default_mixing() -> f64 {
    0.05
}
fn default_budget() -> usize {
    256
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

fn non_negative(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be non-negative and finite, got {x}"),
        ))
    }
}

fn qubits(name: &'static str, n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::param(name, format!("{n} outside [1, {MAX_QUBITS}]")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn minimal(experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment })).expect("defaults deserialize")
    }

    pub fn validate(&self) -> Result<()> {
        qubits("n", self.n)?;
        if let Some(d) = self.dim {
            if d < 2 {
                return Err(Error::param("dim", "database size must be at least 2"));
            }
        }
        positive("omega", self.omega)?;
        positive("schedule.epsilon", self.schedule.epsilon)?;
        if let Some(t) = self.schedule.total_time {
            positive("schedule.total_time", t)?;
        }
        self.bath.validated()?;
        non_negative("gamma", self.gamma)?;
        if let Some(dt) = self.coarse_dt {
            positive("coarse_dt", dt)?;
        }
        for &n in &self.sweep.n {
            qubits("sweep.n", n)?;
        }
        for &g in &self.sweep.gamma {
            non_negative("sweep.gamma", g)?;
        }
        for &e in &self.sweep.epsilon {
            positive("sweep.epsilon", e)?;
        }
        for &t in &self.sweep.total_time {
            positive("sweep.total_time", t)?;
        }
        for &g in &self.sweep.g {
            non_negative("sweep.g", g)?;
        }
        if self.f_points < 2 {
            return Err(Error::param("f_points", "at least two points"));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold < 1.0) {
            return Err(Error::param("success_threshold", "must lie in (0, 1)"));
        }
        if !(self.mixing_threshold > 0.0 && self.mixing_threshold < 1.0) {
            return Err(Error::param("mixing_threshold", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.mixing_f) {
            return Err(Error::param("mixing_f", "must lie in [0, 1]"));
        }
        crate::bloch::bloch_matrix(self.bloch.variant)
            .map_err(|e| Error::param("bloch.variant", e.to_string()))?;
        positive("bloch.ratio_min", self.bloch.ratio_min)?;
        positive("bloch.ratio_max", self.bloch.ratio_max)?;
        if self.bloch.ratio_max < self.bloch.ratio_min || self.bloch.points < 2 {
            return Err(Error::param(
                "bloch.points",
                "need an increasing grid of at least two points",
            ));
        }
        if self.bloch.measurements.contains(&0) {
            return Err(Error::param("bloch.measurements", "counts must be positive"));
        }
        let o = &self.oscillator;
        positive("oscillator.alpha", o.alpha)?;
        positive("oscillator.beta", o.beta)?;
        positive("oscillator.omega", o.omega)?;
        positive("oscillator.mass", o.mass)?;
        positive("oscillator.horizon", o.horizon)?;
        if o.samples == 0 {
            return Err(Error::param("oscillator.samples", "at least one sample"));
        }
        if !o.ramp_rate.is_finite() {
            return Err(Error::param("oscillator.ramp_rate", "must be finite"));
        }
        positive("perturbation.step", self.perturbation.step)?;
        let k = self.perturbation.splittings.len();
        if k == 0 || k > crate::perturbation::MAX_BATH_QUBITS {
            return Err(Error::param(
                "perturbation.splittings",
                "between one and four bath qubits",
            ));
        }
        let count = self.trajectory_count();
        if count > self.max_trajectories {
            return Err(Error::param(
                "max_trajectories",
                format!(
                    "sweep needs {count} trajectories, budget is {}",
                    self.max_trajectories
                ),
            ));
        }
        Ok(())
    }

    /// Trajectories a run of this config will integrate.
    pub fn trajectory_count(&self) -> usize {
        let len = |v: usize| v.max(1);
        match self.experiment {
            ExperimentKind::ZenoSweep => {
                len(self.sweep.gamma.len()) * if self.uniform_channel { 2 } else { 1 }
            }
            ExperimentKind::Scaling => len(self.sweep.n.len()) * (1 + len(self.sweep.gamma.len())),
            ExperimentKind::Perturbation => 2 * (1 + len(self.sweep.g.len())),
            ExperimentKind::Evolve | ExperimentKind::Oscillator => 2,
            _ => 1,
        }
    }

    pub fn problem(&self) -> Result<GroverProblem> {
        match self.dim {
            Some(d) => GroverProblem::with_dim(d, self.omega),
            None => GroverProblem::new(self.n, self.omega),
        }
    }

    pub fn build_schedule(&self, p: &GroverProblem) -> Result<Schedule> {
        match self.schedule.kind {
            ScheduleKind::Adaptive => schedule_adaptive(p, self.schedule.epsilon),
            ScheduleKind::Constant => {
                let t = self.schedule.total_time.unwrap_or_else(|| {
                    // same run-time the adaptive schedule would take
                    crate::grover::adaptive_integral(p.size()) / (self.schedule.epsilon * p.omega)
                });
                schedule_constant(p, t)
            }
        }
    }
}

/// Sets `dotted.key` to `value` (parsed as JSON, else taken as a string).
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::param("--set", format!("expected KEY=VALUE, got `{assignment}`")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::param("--set", "empty key"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::param("--set", format!("`{}` is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}

/// Parses JSON text, applies overrides and validates.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut value: Value = serde_json::from_str(text)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let config: ExperimentConfig = serde_json::from_value(value)?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(r#"{"experiment": "spectrum", "n": 10, "omega": 1.0}"#, &[]).unwrap();
        assert_eq!(c.n, 10);
        assert_eq!(c.f_points, 201);
        assert_eq!(c.backend, Backend::Lindblad);
    }

    #[test]
    fn overrides_win() {
        let text = r#"{"experiment": "evolve", "bath": {"g": 0.1, "tau_env": 0.1, "gamma0": 2.0}}"#;
        let c = parse_config(text, &["bath.gamma0=0.5".into(), "schedule.kind=constant".into()]).unwrap();
        assert_eq!(c.bath.gamma0, 0.5);
        assert_eq!(c.schedule.kind, ScheduleKind::Constant);
    }

    #[test]
    fn rejections_name_the_key() {
        let e = parse_config(r#"{"experiment": "spectrum", "n": 20}"#, &[]).unwrap_err();
        assert!(e.to_string().contains("n"), "{e}");
        let e = parse_config(
            r#"{"experiment": "evolve", "bath": {"g": 0.1, "tau_env": 0.1, "gamma0": -1.0}}"#,
            &[],
        )
        .unwrap_err();
        assert!(e.to_string().contains("bath.gamma0"), "{e}");
        let e = parse_config(r#"{"experiment": "spectrum", "colour": 1}"#, &[]).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = parse_config("{\"experiment\": \"spectrum\",\n \"n\": }", &[]).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(parse_config(r#"{"experiment": "spectrum"}"#, &["n".into()]).is_err());
    }

    #[test]
    fn sweep_budget_is_enforced() {
        let mut c = ExperimentConfig::minimal(ExperimentKind::ZenoSweep);
        c.sweep.gamma = vec![0.1; 300];
        assert!(c.validate().is_err());
        c.max_trajectories = 1000;
        assert!(c.validate().is_ok());
    }
}
