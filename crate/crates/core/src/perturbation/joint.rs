//! Exact unitary evolution of the Grover register together with a few
//! explicit bath spins, `H = H_S(f) ⊗ 1 + Σ_k 1 ⊗ H_k + gΩ Σ σ_sys ⊗ σ_bath`,
//! with `H_k = −(ω_k/2) σ_z`. The system occupies the high bits of the
//! joint index.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::propagator::{CF4_A1, CF4_A2, CF4_NODES};
use super::{CorrelationEntry, Correlations, Coupling, ExpTerm, InteractionSpec};
use crate::dynamics::{Recorder, Trajectory};
use crate::error::{Error, Result};
use crate::grover::{GroverProblem, Schedule};
use crate::quantum::{apply_pauli, inner, reduced_from_pure, vector_norm, Axis, CMatrix, CVector, C64};

pub const MAX_BATH_QUBITS: usize = 4;
pub const MAX_JOINT_QUBITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathLink {
    pub system_qubit: usize,
    pub system_axis: Axis,
    pub bath_qubit: usize,
    pub bath_axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointBathSpec {
    /// `ω_k` per bath qubit.
    pub splittings: Vec<f64>,
    pub links: Vec<BathLink>,
    /// Bath qubits starting in the upper level; all start in the ground
    /// state when empty.
    #[serde(default)]
    pub excited: Vec<bool>,
}

impl JointBathSpec {
    pub fn k(&self) -> usize {
        self.splittings.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let k = self.k();
        if k == 0 || k > MAX_BATH_QUBITS {
            return Err(Error::param(
                "joint.splittings",
                format!("between 1 and {MAX_BATH_QUBITS} bath qubits, got {k}"),
            ));
        }
        if n + k > MAX_JOINT_QUBITS {
            return Err(Error::TooManyQubits {
                n: n + k,
                max: MAX_JOINT_QUBITS,
            });
        }
        if self.splittings.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("joint.splittings", "must be finite"));
        }
        if !self.excited.is_empty() && self.excited.len() != k {
            return Err(Error::param("joint.excited", "one flag per bath qubit"));
        }
        if self.links.is_empty() {
            return Err(Error::param("joint.links", "at least one link is required"));
        }
        for l in &self.links {
            if l.system_qubit >= n {
                return Err(Error::QubitOutOfRange {
                    index: l.system_qubit,
                    n,
                });
            }
            if l.bath_qubit >= k {
                return Err(Error::QubitOutOfRange {
                    index: l.bath_qubit,
                    n: k,
                });
            }
        }
        Ok(())
    }

    fn excited(&self, k: usize) -> bool {
        self.excited.get(k).copied().unwrap_or(false)
    }

    /// Single-spin level `m ∈ {0, 1}` energy; `|0⟩` is `σ_z = +1`.
    fn energy(&self, k: usize, m: usize) -> f64 {
        if m == 0 {
            -0.5 * self.splittings[k]
        } else {
            0.5 * self.splittings[k]
        }
    }

    /// The interaction seen from the system: means `⟨β|σ_b|β⟩` and
    /// two-point functions `Σ_m ⟨β|σ_a|m⟩⟨m|σ_b|β⟩ e^{i(E_β−E_m)τ}`.
    pub fn interaction_spec(&self, g: f64) -> Result<InteractionSpec> {
        let elem = |axis: Axis, r: usize, c: usize| axis.matrix()[[r, c]];
        let state = |k: usize| usize::from(self.excited(k));
        let couplings: Vec<Coupling> = self
            .links
            .iter()
            .map(|l| {
                let b = state(l.bath_qubit);
                Coupling::new(l.system_qubit, l.system_axis).with_expectation(elem(l.bath_axis, b, b).re)
            })
            .collect();
        let mut entries = Vec::new();
        for (i, li) in self.links.iter().enumerate() {
            for (j, lj) in self.links.iter().enumerate() {
                let terms: Vec<ExpTerm> = if li.bath_qubit == lj.bath_qubit {
                    let k = li.bath_qubit;
                    let b = state(k);
                    (0..2)
                        .map(|m| ExpTerm {
                            amplitude: elem(li.bath_axis, b, m) * elem(lj.bath_axis, m, b),
                            rate: C64::new(0.0, -(self.energy(k, b) - self.energy(k, m))),
                        })
                        .filter(|t| t.amplitude.norm() > 0.0)
                        .collect()
                } else {
                    let m = couplings[i].mean() * couplings[j].mean();
                    if m == 0.0 {
                        Vec::new()
                    } else {
                        vec![ExpTerm {
                            amplitude: C64::new(m, 0.0),
                            rate: C64::new(0.0, 0.0),
                        }]
                    }
                };
                if !terms.is_empty() {
                    entries.push(CorrelationEntry { i, j, terms });
                }
            }
        }
        InteractionSpec::new(g, couplings, Correlations::Terms { entries })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JointOptions {
    /// Time step (default `0.01/Ω`).
    pub step: Option<f64>,
    pub records: usize,
    pub snapshots: bool,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            step: None,
            records: 100,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JointOutcome {
    /// Reduced system observables at uniform times.
    pub trajectory: Trajectory,
    pub final_reduced: CMatrix,
    pub final_state: CVector,
    /// `max |‖Ψ‖ − 1|` over the run.
    pub norm_drift: f64,
    /// `1 − ⟨ψ₀(T)|ρ_S(T)|ψ₀(T)⟩`
    pub final_error: f64,
}

struct JointHamiltonian<'a> {
    p: GroverProblem,
    joint: &'a JointBathSpec,
    n: usize,
    total: usize,
    coupling: f64,
    bath_energy: Vec<f64>,
    uniform: CVector,
    norm_bound: f64,
}

impl<'a> JointHamiltonian<'a> {
    fn new(p: &GroverProblem, joint: &'a JointBathSpec, n: usize, g: f64) -> Self {
        let k = joint.k();
        let bath_energy = (0..1usize << k)
            .map(|b| (0..k).map(|q| joint.energy(q, (b >> (k - 1 - q)) & 1)).sum())
            .collect();
        let coupling = g * p.omega;
        let norm_bound = p.omega
            + joint.splittings.iter().map(|w| 0.5 * w.abs()).sum::<f64>()
            + coupling * joint.links.len() as f64;
        JointHamiltonian {
            p: *p,
            joint,
            n,
            total: n + k,
            coupling,
            bath_energy,
            uniform: p.uniform_state(),
            norm_bound,
        }
    }

    /// `H(f) x` with `H_S = −Ωf|s⟩⟨s| − Ω(1−f)|w⟩⟨w|`.
    fn apply(&self, f: f64, x: &CVector) -> Result<CVector> {
        let nb = self.bath_energy.len();
        let ns = self.p.dim;
        let xm = x
            .view()
            .into_shape_with_order((ns, nb))
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let mut out = Array2::<C64>::zeros((ns, nb));
        // uniform projector, column by column over the bath index
        let proj = self.uniform.mapv(|z| z.conj()).dot(&xm);
        let o = self.p.omega;
        for (i, u) in self.uniform.iter().enumerate() {
            out.row_mut(i).scaled_add(-o * f * *u, &proj);
        }
        let w = self.p.marked;
        out.row_mut(w)
            .scaled_add(C64::new(-o * (1.0 - f), 0.0), &xm.row(w));
        for b in 0..nb {
            let e = self.bath_energy[b];
            out.slice_mut(s![.., b])
                .scaled_add(C64::new(e, 0.0), &xm.slice(s![.., b]));
        }
        let mut out = out
            .into_shape_with_order(ns * nb)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        if self.coupling != 0.0 {
            for l in &self.joint.links {
                let y = apply_pauli(l.system_axis, l.system_qubit, self.total, x)?;
                let y = apply_pauli(l.bath_axis, self.n + l.bath_qubit, self.total, &y)?;
                out.scaled_add(C64::new(self.coupling, 0.0), &y);
            }
        }
        Ok(out)
    }

    /// `exp(−iτH(f)) x` by Taylor series on sub-steps with `τ‖H‖ ≤ 1`.
    fn exp_apply(&self, f: f64, tau: f64, x: &CVector) -> Result<CVector> {
        let pieces = (tau.abs() * self.norm_bound).ceil().max(1.0) as usize;
        let dt = tau / pieces as f64;
        let mut v = x.clone();
        for _ in 0..pieces {
            let mut term = v.clone();
            let mut sum = v.clone();
            for j in 1..40 {
                term = self.apply(f, &term)? * C64::new(0.0, -dt / j as f64);
                sum += &term;
                if vector_norm(&term) < 1e-17 * vector_norm(&sum) {
                    break;
                }
            }
            v = sum;
        }
        Ok(v)
    }
}

pub fn joint_exact_evolve(
    p: &GroverProblem,
    joint: &JointBathSpec,
    g: f64,
    schedule: &Schedule,
    opts: &JointOptions,
) -> Result<JointOutcome> {
    let n = p
        .qubits()
        .ok_or_else(|| Error::param("problem", "the joint register needs a qubit system"))?;
    joint.validate(n)?;
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::param("g", "must be non-negative"));
    }
    let h_max = opts.step.unwrap_or(0.01 / p.omega);
    if !(h_max > 0.0) {
        return Err(Error::param("step", "must be positive"));
    }
    let ham = JointHamiltonian::new(p, joint, n, g);
    let k = joint.k();
    let nb = 1usize << k;
    let bath_index = (0..k).fold(0usize, |acc, q| (acc << 1) | usize::from(joint.excited(q)));
    let (ground0, _) = p.instantaneous_states(schedule.f(0.0)?);
    let mut psi = CVector::zeros(p.dim * nb);
    for (i, a) in ground0.iter().enumerate() {
        psi[i * nb + bath_index] = *a;
    }

    let levels = |f: f64| Ok(p.instantaneous_states(f));
    let recorder = Recorder {
        levels: &levels,
        spectral_every: 1,
        abort_on_positivity: false,
        snapshots: opts.snapshots,
    };
    let mut traj = Trajectory::default();
    let records = opts.records.max(1);
    let total = schedule.total_time;
    let mut norm_drift: f64 = 0.0;
    let mut t = 0.0;
    recorder.record(
        0,
        0.0,
        schedule.f(0.0)?,
        &reduced_from_pure(&psi, p.dim, nb)?,
        &mut traj,
    )?;
    for r in 1..=records {
        let target = total * r as f64 / records as f64;
        let span = target - t;
        let steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for j in 0..steps {
            let a = t + j as f64 * h;
            let f1 = schedule.f((a + CF4_NODES[0] * h).min(total))?;
            let f2 = schedule.f((a + CF4_NODES[1] * h).min(total))?;
            let fa = 2.0 * (CF4_A2 * f1 + CF4_A1 * f2);
            let fb = 2.0 * (CF4_A1 * f1 + CF4_A2 * f2);
            psi = ham.exp_apply(fa, 0.5 * h, &psi)?;
            psi = ham.exp_apply(fb, 0.5 * h, &psi)?;
        }
        t = target;
        norm_drift = norm_drift.max((vector_norm(&psi) - 1.0).abs());
        let rho = reduced_from_pure(&psi, p.dim, nb)?;
        recorder.record(r, t, schedule.f(t)?, &rho, &mut traj)?;
    }
    let final_reduced = reduced_from_pure(&psi, p.dim, nb)?;
    let (g_out, _) = p.instantaneous_states(schedule.f(total)?);
    let final_error = 1.0 - inner(&g_out, &final_reduced.dot(&g_out)).re;
    traj.final_state = Some(final_reduced.clone());
    Ok(JointOutcome {
        trajectory: traj,
        final_reduced,
        final_state: psi,
        norm_drift,
        final_error,
    })
}
