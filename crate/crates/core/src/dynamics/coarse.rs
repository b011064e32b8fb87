use serde::{Deserialize, Serialize};

use super::evolve::Recorder;
use super::{Operator, Trajectory};
use crate::error::{Error, Result};
use crate::grover::{GroverProblem, Schedule};
use crate::quantum::{hermitize, trace, CMatrix, DensityMatrix, C64, I};

/// Short-time propagator `U(t+Δt, t)`.
#[derive(Debug, Clone)]
pub enum StepPropagator {
    Dense(CMatrix),
    /// `𝟙 + K` with low-rank `K`.
    IdentityPlus(Operator),
}

impl StepPropagator {
    pub fn identity(dim: usize) -> Self {
        StepPropagator::IdentityPlus(Operator::zero(dim))
    }

    /// `U ρ U†`
    pub fn conjugate(&self, rho: &CMatrix) -> CMatrix {
        match self {
            StepPropagator::Dense(u) => Operator::Dense(u.clone()).sandwich(rho),
            StepPropagator::IdentityPlus(k) => {
                if k.is_zero() {
                    return rho.clone();
                }
                let kr = k.left_mul(rho);
                let mut out = rho + &kr;
                out += &k.adjoint().right_mul(rho);
                out += &k.adjoint().right_mul(&kr);
                out
            }
        }
    }
}

/// One coarse-graining window.
#[derive(Debug, Clone)]
pub struct CoarseStep<'a> {
    /// System propagator over the window.
    pub propagator: &'a StepPropagator,
    /// Hermitian measured operators `P_k` with their rates: `L_k = √Γ_k P_k`.
    pub channels: &'a [(f64, Operator)],
    pub dt: f64,
    /// Optional Lamb-type shift `ΔH_eff` (an energy; applied for `dt`).
    pub lamb_shift: Option<&'a Operator>,
}

/// Validity context for the warning channel.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CoarseOptions {
    pub tau_env: Option<f64>,
    pub total_time: Option<f64>,
}

fn validity_warnings(dt: f64, channels: &[(f64, Operator)], ctx: &CoarseOptions) -> Vec<String> {
    let mut w = Vec::new();
    if let Some(tau) = ctx.tau_env {
        if dt < 10.0 * tau {
            w.push(format!(
                "coarse-graining window {dt:.3e} is not much longer than tau_env = {tau:.3e}"
            ));
        }
    }
    if let Some(total) = ctx.total_time {
        if dt > total / 50.0 {
            w.push(format!(
                "coarse-graining window {dt:.3e} is not much shorter than the run-time {total:.3e}"
            ));
        }
    }
    let rate: f64 = channels.iter().map(|(g, _)| g).sum();
    if rate * dt > 0.5 {
        w.push(format!(
            "Gamma*dt = {:.3} is not small; the first-order window update loses accuracy",
            rate * dt
        ));
    }
    w
}

/// `ρ(t+Δt) = U [ρ − iΔt[ΔH, ρ] + Δt Σ_k ((L_k ρ L_k − L_k² ρ) + h.c.)] U†`
/// with `L_k = √Γ_k P_k` self-adjoint.
///
/// This is the interaction-picture window update carried to the Schrödinger
/// frame; with `U = 𝟙` coherences between the measured subspace and its
/// complement shrink by `1 − ΓΔt`.
pub fn coarse_grained_step(
    rho: &DensityMatrix,
    step: &CoarseStep,
    ctx: &CoarseOptions,
) -> Result<(DensityMatrix, Vec<String>)> {
    if !(step.dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let warnings = validity_warnings(step.dt, step.channels, ctx);
    let out = coarse_update(rho.matrix(), step)?;
    Ok((DensityMatrix::new_unchecked(out), warnings))
}

fn coarse_update(rho: &CMatrix, step: &CoarseStep) -> Result<CMatrix> {
    let dim = rho.nrows();
    let mut d = CMatrix::zeros((dim, dim));
    for (gamma, p) in step.channels {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        if *gamma < 0.0 {
            return Err(Error::param("gamma", "rates must be non-negative"));
        }
        let p2 = p.compose(p);
        d += &(p.sandwich(rho) * C64::new(2.0 * gamma, 0.0));
        d.scaled_add(C64::new(-gamma, 0.0), &p2.left_mul(rho));
        d.scaled_add(C64::new(-gamma, 0.0), &p2.right_mul(rho));
    }
    if let Some(h) = step.lamb_shift {
        let comm = h.left_mul(rho) - h.right_mul(rho);
        d.scaled_add(-I, &comm);
    }
    let mut next = rho.clone();
    next.scaled_add(C64::new(step.dt, 0.0), &d);
    Ok(step.propagator.conjugate(&next))
}

/// `exp(−i H(f) Δt)` for the Grover Hamiltonian, exact in the invariant
/// subspace and the identity on its complement.
pub fn grover_step_propagator(p: &GroverProblem, f: f64, dt: f64) -> StepPropagator {
    let (g, e) = p.instantaneous_states(f);
    let (e0, e1) = p.subspace_energies(f);
    let k0 = C64::from_polar(1.0, -e0 * dt) - 1.0;
    let k1 = C64::from_polar(1.0, -e1 * dt) - 1.0;
    StepPropagator::IdentityPlus(Operator::rank_one(k0, g.clone(), g).plus(&Operator::rank_one(
        k1,
        e.clone(),
        e,
    )))
}

/// Composes coarse-graining windows of length `dt` over a schedule, using
/// the Hamiltonian at each window's midpoint.
pub fn coarse_grained_evolve(
    p: &GroverProblem,
    schedule: &Schedule,
    channels: &[(f64, Operator)],
    dt: f64,
    rho0: &DensityMatrix,
    lamb_shift: Option<&Operator>,
    ctx: &CoarseOptions,
    record_every: usize,
) -> Result<Trajectory> {
    if rho0.dim() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: rho0.dim(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let total = schedule.total_time;
    let steps = (total / dt).ceil().max(1.0) as usize;
    let h = total / steps as f64;
    let levels = |f: f64| Ok(p.instantaneous_states(f));
    let recorder = Recorder {
        levels: &levels,
        spectral_every: 0,
        abort_on_positivity: false,
        snapshots: false,
    };
    let mut traj = Trajectory::default();
    traj.warnings = validity_warnings(h, channels, ctx);
    let mut rho = rho0.matrix().clone();
    recorder.record(0, 0.0, 1.0, &rho, &mut traj)?;
    let every = record_every.max(1);
    for k in 0..steps {
        let t_mid = (k as f64 + 0.5) * h;
        let u = grover_step_propagator(p, schedule.f(t_mid)?, h);
        let step = CoarseStep {
            propagator: &u,
            channels,
            dt: h,
            lamb_shift,
        };
        rho = hermitize(&coarse_update(&rho, &step)?);
        let tr = trace(&rho).re;
        rho *= C64::new(1.0 / tr, 0.0);
        if (k + 1) % every == 0 || k + 1 == steps {
            let t = if k + 1 == steps { total } else { (k + 1) as f64 * h };
            recorder.record(k + 1, t, schedule.f(t)?, &rho, &mut traj)?;
        }
    }
    traj.steps_accepted = steps;
    traj.final_state = Some(rho);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grover::schedule_adaptive;
    use crate::quantum::*;

    #[test]
    fn dephasing_window_with_identity_propagator() {
        let mut m = CMatrix::zeros((2, 2));
        m[[0, 0]] = re(0.6);
        m[[1, 1]] = re(0.4);
        m[[0, 1]] = c(0.2, 0.1);
        m[[1, 0]] = c(0.2, -0.1);
        let rho = DensityMatrix::new(m.clone()).unwrap();
        let p0 = Operator::projector(1.0, &basis_vector(2, 0));
        let (gamma, dt) = (0.8, 0.01);
        let channels = [(gamma, p0)];
        let u = StepPropagator::identity(2);
        let step = CoarseStep {
            propagator: &u,
            channels: &channels,
            dt,
            lamb_shift: None,
        };
        let (out, _) = coarse_grained_step(&rho, &step, &CoarseOptions::default()).unwrap();
        let o = out.matrix();
        assert!((o[[0, 0]] - m[[0, 0]]).norm() < 1e-15);
        assert!((o[[1, 1]] - m[[1, 1]]).norm() < 1e-15);
        let factor = o[[0, 1]] / m[[0, 1]];
        assert!((factor.re - (-gamma * dt).exp()).abs() < (gamma * dt).powi(2));
    }

    #[test]
    fn zero_rate_is_unitary() {
        let p = GroverProblem::new(3, 1.0).unwrap();
        let dt = 0.05;
        let u = grover_step_propagator(&p, 0.3, dt);
        let h = crate::grover::grover_hamiltonian(&p, 0.3).unwrap();
        let exact = unitary_propagator(h.matrix(), dt);
        let rho = DensityMatrix::pure(&p.uniform_state()).unwrap();
        let step = CoarseStep {
            propagator: &u,
            channels: &[],
            dt,
            lamb_shift: None,
        };
        let (out, _) = coarse_grained_step(&rho, &step, &CoarseOptions::default()).unwrap();
        let reference = Operator::Dense(exact).sandwich(rho.matrix());
        assert!(frobenius_norm(&(out.matrix() - &reference)) < 1e-12);
    }

    #[test]
    fn validity_warnings_fire() {
        let rho = DensityMatrix::maximally_mixed(2);
        let u = StepPropagator::identity(2);
        let step = CoarseStep {
            propagator: &u,
            channels: &[],
            dt: 0.1,
            lamb_shift: None,
        };
        let ctx = CoarseOptions {
            tau_env: Some(0.05),
            total_time: Some(1.0),
        };
        let (_, w) = coarse_grained_step(&rho, &step, &ctx).unwrap();
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn strong_measurement_mixes_lz_subspace() {
        let p = GroverProblem::new(4, 1.0).unwrap();
        let schedule = schedule_adaptive(&p, 0.1).unwrap();
        let channels = [(2.0, Operator::projector(1.0, &p.marked_state()))];
        let rho0 = DensityMatrix::pure(&p.uniform_state()).unwrap();
        let traj = coarse_grained_evolve(
            &p,
            &schedule.stretched(20.0),
            &channels,
            0.05,
            &rho0,
            None,
            &CoarseOptions::default(),
            100,
        )
        .unwrap();
        let (a, b) = traj.last().lz_populations();
        assert!((a - 0.5).abs() < 1e-3 && (b - 0.5).abs() < 1e-3, "{a} {b}");
    }
}
