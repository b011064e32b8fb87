use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{ExperimentConfig, RunDirectory};
use crate::dynamics::{evolve, Drive, EvolveOptions, HamiltonianModel, LindbladGenerator, Operator};
use crate::error::{Error, Result};
use crate::fit::log_log_fit;
use crate::grover::{schedule_adaptive, schedule_constant, GroverProblem, Schedule, ScheduleKind};
use crate::integrate::OdeOptions;
use crate::perturbation::TimeOrderedPropagator;
use crate::quantum::{inner, CMatrix, DensityMatrix, C64};

/// Power law `y = C x^k` fitted on log-log axes.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub exponent: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() < 4 {
            return Err(Error::param(
                "sweep",
                format!("a scaling fit needs ≥ 4 points, got {}", x.len()),
            ));
        }
        let f = log_log_fit(&x, &y)?;
        Ok(ScalingFit {
            x,
            y,
            exponent: f.slope,
            stderr: f.slope_stderr,
            r_squared: f.r_squared,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RuntimePoint {
    pub n: usize,
    pub size: f64,
    pub kind: ScheduleKind,
    /// Shortest run-time found with `success ≥ threshold`.
    pub total_time: f64,
    pub success: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MixingPoint {
    pub n: usize,
    pub size: f64,
    pub gamma: f64,
    pub f: f64,
    pub mixing_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub runtime: Vec<RuntimePoint>,
    pub adaptive: ScalingFit,
    pub constant: ScalingFit,
    pub mixing: Vec<MixingPoint>,
    /// Mixing time vs `N` at the smallest swept `Γ`.
    pub mixing_fit: Option<ScalingFit>,
}

const MAX_STEP: f64 = 0.05;

/// Closed-system success `|⟨w|U(T)|s⟩|²` on the two-level block.
fn success(p: &GroverProblem, s: &Schedule) -> Result<f64> {
    let mut u = TimeOrderedPropagator::new(p, 0.0, MAX_STEP / p.omega)?;
    u.advance(s, s.total_time)?;
    let psi = u.apply(&p.uniform_state());
    Ok(inner(&p.marked_state(), &psi).norm_sqr())
}

/// Shortest run-time after which success stays `≥ threshold`.
///
/// Success oscillates in `T` (interference of the two boundary
/// contributions), so a plain first crossing would pick a lucky peak. The
/// scan walks a fine geometric grid until every point over a further factor
/// of 1.5 passes, then bisects the last failing bracket.
pub fn runtime_for_success(p: &GroverProblem, kind: ScheduleKind, threshold: f64) -> Result<RuntimePoint> {
    let base = match kind {
        ScheduleKind::Adaptive => schedule_adaptive(p, 1.0)?,
        ScheduleKind::Constant => schedule_constant(p, 1.0)?,
    };
    let at = |factor: f64| success(p, &base.stretched(factor));
    let ratio = 1.005f64;
    let hold = (1.5f64.ln() / ratio.ln()).ceil() as usize;
    let mut x = match kind {
        ScheduleKind::Adaptive => 0.5,
        ScheduleKind::Constant => 0.5 * p.size().sqrt() / p.omega,
    };
    if at(x)? >= threshold {
        return Err(Error::Numerical(format!(
            "success already ≥ {threshold} at the scan start"
        )));
    }
    let mut last_fail = x;
    let mut first_pass: Option<(f64, f64)> = None;
    let mut streak = 0;
    for _ in 0..20_000 {
        x *= ratio;
        let s = at(x)?;
        if s >= threshold {
            if streak == 0 {
                first_pass = Some((x, s));
            }
            streak += 1;
            if streak >= hold {
                break;
            }
        } else {
            last_fail = x;
            streak = 0;
        }
    }
    if streak < hold {
        return Err(Error::Numerical("success threshold never held".into()));
    }
    let (mut hi, mut s_hi) = first_pass.expect("a passing streak has a first point");
    let mut lo = last_fail;
    while hi - lo > 1e-5 * hi {
        let mid = 0.5 * (lo + hi);
        let s = at(mid)?;
        if s >= threshold {
            hi = mid;
            s_hi = s;
        } else {
            lo = mid;
        }
    }
    Ok(RuntimePoint {
        n: p.qubits().unwrap_or(0),
        size: p.size(),
        kind,
        total_time: base.stretched(hi).total_time,
        success: s_hi,
    })
}

/// Lindblad equation on the invariant span `{|w⟩, |w⊥⟩}` with
/// `L = √Γ|w⟩⟨w|`; both the Grover Hamiltonian and the jump preserve it.
pub fn subspace_lindblad(p: &GroverProblem, gamma: f64) -> Result<LindbladGenerator> {
    let q = *p;
    let build = move |f: f64| -> Result<Operator> {
        let h = q.subspace_hamiltonian(f);
        Ok(Operator::Dense(CMatrix::from_shape_fn((2, 2), |(i, j)| {
            C64::new(h[i][j], 0.0)
        })))
    };
    let w = crate::quantum::basis_vector(2, 0);
    LindbladGenerator::new(
        HamiltonianModel::Custom {
            dim: 2,
            build: Arc::new(build),
        },
        vec![Operator::projector(gamma.sqrt(), &w)],
    )
}

/// First time the Landau–Zener block of `ρ(t)`, started in `|w⊥⟩` at frozen
/// `f`, comes within `threshold` (trace distance) of `𝟙/2`.
pub fn mixing_time(p: &GroverProblem, gamma: f64, f: f64, threshold: f64) -> Result<MixingPoint> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", "mixing needs a positive rate"));
    }
    let gen = subspace_lindblad(p, gamma)?;
    let rho0 = DensityMatrix::basis(2, 1)?;
    let o2 = p.omega * p.omega;
    // strong-dephasing estimate of the population relaxation time
    let mut duration = 2.0 * 10f64.ln() * p.size() * gamma / o2 + 10.0 / gamma + 10.0 / p.omega;
    let records = 4000;
    let opts = EvolveOptions {
        ode: OdeOptions::with_tolerances(1e-12, 1e-10),
        records,
        spectral_every: records,
        abort_on_positivity: false,
        snapshots: false,
    };
    for _ in 0..6 {
        let traj = evolve(&gen, &rho0, Drive::Fixed { f, duration }, &opts)?;
        let d: Vec<f64> = traj.records.iter().map(|r| r.lz_distance_to_mixed()).collect();
        if let Some(k) = d.iter().position(|&x| x < threshold) {
            let t = if k == 0 {
                0.0
            } else {
                let (t0, t1) = (traj.records[k - 1].t, traj.records[k].t);
                t0 + (t1 - t0) * (d[k - 1] - threshold) / (d[k - 1] - d[k])
            };
            return Ok(MixingPoint {
                n: p.qubits().unwrap_or(0),
                size: p.size(),
                gamma,
                f,
                mixing_time: t,
            });
        }
        duration *= 2.0;
    }
    Err(Error::Numerical(format!("no mixing within t = {duration:.3e}")))
}

pub fn run_runtime_scaling(config: &ExperimentConfig) -> Result<ScalingReport> {
    let ns: Vec<usize> = if config.sweep.n.is_empty() {
        (4..=10).collect()
    } else {
        config.sweep.n.clone()
    };
    let problems = ns
        .iter()
        .map(|&n| GroverProblem::new(n, config.omega))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(GroverProblem, ScheduleKind)> = problems
        .iter()
        .flat_map(|p| [(*p, ScheduleKind::Adaptive), (*p, ScheduleKind::Constant)])
        .collect();
    let runtime = jobs
        .par_iter()
        .map(|(p, k)| runtime_for_success(p, *k, config.success_threshold))
        .collect::<Result<Vec<_>>>()?;
    let fit = |kind: ScheduleKind| {
        let (x, y) = runtime
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| (r.size, r.total_time))
            .unzip();
        ScalingFit::new(x, y)
    };
    let mut gammas: Vec<f64> = if config.sweep.gamma.is_empty() {
        vec![config.gamma]
    } else {
        config.sweep.gamma.clone()
    };
    gammas.retain(|&g| g > 0.0);
    gammas.sort_by(f64::total_cmp);
    let mjobs: Vec<(GroverProblem, f64)> = problems
        .iter()
        .flat_map(|p| gammas.iter().map(move |&g| (*p, g)))
        .collect();
    let mixing = mjobs
        .par_iter()
        .map(|(p, g)| mixing_time(p, *g, config.mixing_f, config.mixing_threshold))
        .collect::<Result<Vec<_>>>()?;
    let mixing_fit = match gammas.first() {
        Some(&g0) if ns.len() >= 4 => {
            let (x, y) = mixing
                .iter()
                .filter(|m| m.gamma == g0)
                .map(|m| (m.size, m.mixing_time))
                .unzip();
            Some(ScalingFit::new(x, y)?)
        }
        _ => None,
    };
    Ok(ScalingReport {
        adaptive: fit(ScheduleKind::Adaptive)?,
        constant: fit(ScheduleKind::Constant)?,
        runtime,
        mixing,
        mixing_fit,
    })
}

pub(super) fn write(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let r = run_runtime_scaling(config)?;
    let rows: Vec<Vec<f64>> = r
        .runtime
        .iter()
        .map(|x| {
            let k = if x.kind == ScheduleKind::Adaptive {
                0.0
            } else {
                1.0
            };
            vec![x.n as f64, x.size, k, x.total_time, x.success]
        })
        .collect();
    dir.write_csv("runtime.csv", &["n", "N", "constant", "T", "success"], &rows)?;
    let rows: Vec<Vec<f64>> = r
        .mixing
        .iter()
        .map(|x| vec![x.n as f64, x.size, x.gamma, x.f, x.mixing_time])
        .collect();
    dir.write_csv("mixing.csv", &["n", "N", "gamma", "f", "mixing_time"], &rows)?;
    let summary = serde_json::to_value(&r)?;
    dir.write_json("report.json", &summary)?;
    Ok(summary)
}
