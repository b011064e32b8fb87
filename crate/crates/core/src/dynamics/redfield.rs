use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::evolve::Recorder;
use super::lindblad::{dense_levels, HamiltonianModel};
use super::singular::{singular_coupling_generator, CorrelationTable, SingularCoupling};
use super::{BathModel, CorrelationKind, Drive, Trajectory};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::quantum::{
    dagger, trace, unitary_propagator, CMatrix, CVector, DensityMatrix, HermitianOperator, C64,
};

/// Interaction-picture coupling operators `σ_ν(t_j)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct RedfieldHistory {
    spacing: f64,
    first: usize,
    samples: VecDeque<Vec<CMatrix>>,
    capacity: usize,
}

impl RedfieldHistory {
    /// Buffer with grid `spacing` keeping at least `depth` of memory.
    pub fn new(spacing: f64, depth: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::param("spacing", "must be positive"));
        }
        let capacity = (depth / spacing).ceil() as usize + 3;
        Ok(Self {
            spacing,
            first: 0,
            samples: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Appends the operators at the next grid time.
    pub fn push(&mut self, ops: Vec<CMatrix>) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
            self.first += 1;
        }
        self.samples.push_back(ops);
    }

    /// Grid index of the newest sample.
    pub fn latest(&self) -> Option<usize> {
        (!self.samples.is_empty()).then(|| self.first + self.samples.len() - 1)
    }

    fn get(&self, index: usize) -> Option<&Vec<CMatrix>> {
        index.checked_sub(self.first).and_then(|k| self.samples.get(k))
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.spacing;
        let j = x.round();
        if (x - j).abs() > 1e-6 || j < 0.0 {
            return Err(Error::param(
                "t",
                format!("{t} is not on the history grid (spacing {})", self.spacing),
            ));
        }
        Ok(j as usize)
    }
}

fn phi_weights(z: C64, delta: f64) -> (C64, C64) {
    // I0 = ∫₀^δ e^{−zu} du, I1 = ∫₀^δ u e^{−zu} du
    let x = z * delta;
    if x.norm() < 1e-3 {
        let i0 = delta * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0);
        let i1 = delta * delta * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0);
        (i0, i1)
    } else {
        let e = (-x).exp();
        ((1.0 - e) / z, (1.0 - e * (1.0 + x)) / (z * z))
    }
}

/// `Λ_μ(t) = g²Ω² Σ_ν w_μν ∫₀^{min(t, depth)} C(τ) σ_ν(t−τ) dτ`.
fn memory_operators(
    history: &RedfieldHistory,
    index: usize,
    bath: &BathModel,
    omega: f64,
    depth: f64,
) -> Result<Vec<CMatrix>> {
    let now = history.get(index).ok_or(Error::InsufficientHistory {
        available: 0.0,
        required: 0.0,
    })?;
    let count = now.len();
    let dim = now[0].nrows();
    let pref = bath.g * bath.g * omega * omega;
    let delta = history.spacing;
    // Integrals J_ν = ∫ C(τ) σ_ν(t−τ) dτ per coupling operator.
    let mut j: Vec<CMatrix> = vec![CMatrix::zeros((dim, dim)); count];
    match bath.kind {
        CorrelationKind::Delta => {
            for (jn, s) in j.iter_mut().zip(now) {
                *jn = s * C64::new(0.5 * bath.gamma0, 0.0);
            }
        }
        _ => {
            let wanted = (depth / delta).ceil() as usize;
            let intervals = wanted.min(index);
            let oldest = index - intervals;
            if history.get(oldest).is_none() {
                return Err(Error::InsufficientHistory {
                    available: (index - history.first) as f64 * delta,
                    required: intervals as f64 * delta,
                });
            }
            let mut weights = vec![C64::new(0.0, 0.0); intervals + 1];
            match bath.exponential_parts() {
                Some((a, z)) => {
                    let (i0, i1) = phi_weights(z, delta);
                    for m in 0..intervals {
                        let em = (-z * (m as f64 * delta)).exp() * a;
                        weights[m] += em * (i0 - i1 / delta);
                        weights[m + 1] += em * i1 / delta;
                    }
                }
                None => {
                    for m in 0..intervals {
                        weights[m] += bath.correlation(m as f64 * delta) * (0.5 * delta);
                        weights[m + 1] += bath.correlation((m + 1) as f64 * delta) * (0.5 * delta);
                    }
                }
            }
            for (m, w) in weights.iter().enumerate() {
                let past = history.get(index - m).expect("checked above");
                for (jn, s) in j.iter_mut().zip(past) {
                    jn.scaled_add(*w, s);
                }
            }
        }
    }
    let mut lambdas = vec![CMatrix::zeros((dim, dim)); count];
    for (mu, l) in lambdas.iter_mut().enumerate() {
        for (nu, jn) in j.iter().enumerate() {
            let w = bath.spatial.weight(mu, nu);
            if w != 0.0 {
                l.scaled_add(C64::new(pref * w, 0.0), jn);
            }
        }
    }
    Ok(lambdas)
}

/// Redfield-I right-hand side in the interaction picture,
/// `Σ_μ (Λ_μ ρ σ_μ(t) − σ_μ(t) Λ_μ ρ) + h.c.`
///
/// `t` must be a grid time held in `history`, which must reach back
/// `min(t, depth_factor·τ_env)`.
pub fn redfield_rhs(
    rho: &CMatrix,
    t: f64,
    history: &RedfieldHistory,
    bath: &BathModel,
    omega: f64,
    depth_factor: f64,
) -> Result<CMatrix> {
    let index = history.index_of(t)?;
    let depth = depth_factor * bath.tau_env;
    let sig = history.get(index).ok_or(Error::InsufficientHistory {
        available: 0.0,
        required: depth.min(t),
    })?;
    let lambdas = memory_operators(history, index, bath, omega, depth)?;
    let dim = rho.nrows();
    let mut half = CMatrix::zeros((dim, dim));
    for (l, s) in lambdas.iter().zip(sig) {
        let lr = l.dot(rho);
        half += &lr.dot(s);
        half -= &s.dot(&lr);
    }
    Ok(&half + &dagger(&half))
}

/// Markovian (`σ(t−τ) ≈ σ(t)`) rate and energy shift of the memory integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortMemoryRate {
    /// `g²Ω² Σ_{μν} Re ∫₀^∞ C_{μν}`
    pub rate: f64,
    /// The imaginary part, an energy shift.
    pub shift: f64,
}

pub fn redfield_short_memory_rate(bath: &BathModel, omega: f64, n: usize) -> Result<ShortMemoryRate> {
    let k = bath.half_integral()?;
    let s = bath.g * bath.g * omega * omega * bath.spatial.pair_count(n);
    Ok(ShortMemoryRate {
        rate: s * k.re,
        shift: s * k.im,
    })
}

impl ShortMemoryRate {
    /// The short-memory limit of Redfield-I as a Lindblad generator over
    /// the given coupling operators.
    pub fn generator(
        bath: &BathModel,
        omega: f64,
        couplings: &[HermitianOperator],
        hamiltonian: HamiltonianModel,
    ) -> Result<SingularCoupling> {
        let table = CorrelationTable::from_bath(bath, couplings.len(), omega * omega)?;
        singular_coupling_generator(couplings, &table, bath.g, hamiltonian)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RedfieldOptions {
    /// Fixed RK4 step; the history grid has spacing `dt/2`.
    pub dt: f64,
    /// Memory depth in units of `τ_env`.
    pub depth_factor: f64,
    /// Record every k-th step.
    pub record_every: usize,
}

impl Default for RedfieldOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            depth_factor: 8.0,
            record_every: 10,
        }
    }
}

/// Integrates Redfield-I with a time-ordered system propagator.
///
/// The propagator is accumulated as a product of midpoint exponentials on
/// the history grid. Records hold the Schrödinger-frame state; positivity
/// is reported (minimum eigenvalue, warning) but never enforced.
pub fn redfield_evolve(
    hamiltonian: &HamiltonianModel,
    couplings: &[HermitianOperator],
    bath: &BathModel,
    omega: f64,
    rho0: &DensityMatrix,
    drive: Drive,
    opts: &RedfieldOptions,
) -> Result<Trajectory> {
    let dim = hamiltonian.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho0.dim(),
        });
    }
    if couplings.is_empty() {
        return Err(Error::param(
            "couplings",
            "at least one coupling operator is required",
        ));
    }
    for c in couplings {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
    }
    if !(opts.dt > 0.0) {
        return Err(Error::param("redfield.dt", "must be positive"));
    }
    let duration = drive.duration();
    let steps = (duration / opts.dt).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let delta = 0.5 * h;
    let depth = opts.depth_factor * bath.tau_env;
    let mut history = RedfieldHistory::new(delta, depth)?;

    let levels = |f: f64| -> Result<(CVector, CVector)> {
        match hamiltonian {
            HamiltonianModel::Grover(p) => Ok(p.instantaneous_states(f)),
            _ => dense_levels(&hamiltonian.at(f)?),
        }
    };
    let recorder = Recorder {
        levels: &levels,
        spectral_every: 1,
        abort_on_positivity: false,
        snapshots: false,
    };

    let interaction = |u: &CMatrix| -> Vec<CMatrix> {
        let ud = dagger(u);
        couplings.iter().map(|s| ud.dot(s.matrix()).dot(u)).collect()
    };
    let advance = |u: &CMatrix, index: usize| -> Result<CMatrix> {
        let t_mid = (index as f64 + 0.5) * delta;
        let hm = hamiltonian.at(drive.f(t_mid)?)?.to_dense();
        Ok(unitary_propagator(&hm, delta).dot(u))
    };

    let mut u = CMatrix::eye(dim);
    history.push(interaction(&u));
    let mut rho_i = rho0.matrix().clone();
    let mut traj = Trajectory::default();
    recorder.record(0, 0.0, drive.f(0.0)?, &rho_i, &mut traj)?;
    let mut warned = false;
    let every = opts.record_every.max(1);

    for k in 0..steps {
        let base = 2 * k;
        let u_half = advance(&u, base)?;
        history.push(interaction(&u_half));
        u = advance(&u_half, base + 1)?;
        history.push(interaction(&u));
        let t0 = base as f64 * delta;
        rho_i = rk4_step(
            |t, r: &CMatrix| redfield_rhs(r, t, &history, bath, omega, opts.depth_factor),
            t0,
            &rho_i,
            h,
        )?;
        if (k + 1) % every == 0 || k + 1 == steps {
            let t = (base + 2) as f64 * delta;
            let rho_s = u.dot(&rho_i).dot(&dagger(&u));
            recorder.record(k + 1, t, drive.f(t)?, &rho_s, &mut traj)?;
            let rec = traj.last();
            if rec.min_eig < -crate::tolerances::TOL.positivity_abort && !warned {
                traj.warnings.push(format!(
                    "positivity violated at t={t:.6e}: minimum eigenvalue {:.3e}",
                    rec.min_eig
                ));
                warned = true;
            }
            if (trace(&rho_s).re - 1.0).abs() > 1e-10 {
                traj.warnings
                    .push(format!("trace drift {:.3e} at t={t:.6e}", trace(&rho_s).re - 1.0));
            }
        }
    }
    traj.steps_accepted = steps;
    traj.final_state = Some(u.dot(&rho_i).dot(&dagger(&u)));
    Ok(traj)
}
