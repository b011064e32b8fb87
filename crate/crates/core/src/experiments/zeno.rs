use rayon::prelude::*;
use serde::Serialize;

use super::{Backend, ExperimentConfig, RunDirectory};
use crate::dynamics::{
    coarse_grained_evolve, evolve, CoarseOptions, Drive, EvolveOptions, HamiltonianModel, LindbladGenerator,
    Operator, Trajectory,
};
use crate::error::{Error, Result};
use crate::grover::{GroverProblem, Schedule};
use crate::integrate::OdeOptions;
use crate::quantum::DensityMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct ZenoPoint {
    pub gamma: f64,
    pub gamma_t: f64,
    /// Whether `√Γ|s⟩⟨s|` was added to `√Γ|w⟩⟨w|`.
    pub uniform_channel: bool,
    /// Ground-state population at `t = T`.
    pub success: f64,
    /// Normalized populations of the Landau–Zener sector `(ground, excited)`.
    pub lz_populations: (f64, f64),
    pub lz_purity: f64,
    pub lz_distance_to_mixed: f64,
    pub min_eig: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZenoReport {
    pub n: usize,
    pub total_time: f64,
    pub backend: Backend,
    pub points: Vec<ZenoPoint>,
    /// `success(Γ)` never increases along the sorted sweep (per channel set).
    pub monotone: bool,
}

/// `√Γ|w⟩⟨w|` (plus `√Γ|s⟩⟨s|`) as Lindblad jumps.
pub(crate) fn zeno_jumps(p: &GroverProblem, gamma: f64, uniform: bool) -> Vec<Operator> {
    let mut v = vec![Operator::projector(gamma.sqrt(), &p.marked_state())];
    if uniform {
        v.push(Operator::projector(gamma.sqrt(), &p.uniform_state()));
    }
    v
}

pub(crate) fn open_system_run(
    config: &ExperimentConfig,
    p: &GroverProblem,
    schedule: &Schedule,
    gamma: f64,
    uniform: bool,
) -> Result<Trajectory> {
    let rho0 = DensityMatrix::pure(&p.uniform_state())?;
    match config.backend {
        Backend::Lindblad => {
            let gen = LindbladGenerator::new(HamiltonianModel::Grover(*p), zeno_jumps(p, gamma, uniform))?;
            let opts = EvolveOptions {
                ode: OdeOptions::with_tolerances(1e-10, 1e-8),
                records: config.records,
                spectral_every: config.records.max(1),
                abort_on_positivity: true,
                snapshots: false,
            };
            evolve(&gen, &rho0, Drive::Schedule(schedule), &opts)
        }
        Backend::Coarse => {
            // the window update with rate Γ/2 is the Lindblad form with √Γ P
            let mut channels = vec![(0.5 * gamma, Operator::projector(1.0, &p.marked_state()))];
            if uniform {
                channels.push((0.5 * gamma, Operator::projector(1.0, &p.uniform_state())));
            }
            let total = schedule.total_time;
            let dt = config.coarse_dt.unwrap_or(total / 400.0);
            let ctx = CoarseOptions {
                tau_env: Some(config.bath.tau_env),
                total_time: Some(total),
            };
            let every = ((total / dt).ceil() as usize / config.records.max(1)).max(1);
            coarse_grained_evolve(p, schedule, &channels, dt, &rho0, None, &ctx, every)
        }
        other => Err(Error::param(
            "backend",
            format!("{other:?} is driven by a bath model, not by a measurement rate Γ"),
        )),
    }
}

fn point(config: &ExperimentConfig, p: &GroverProblem, s: &Schedule, gamma: f64, uniform: bool) -> ZenoPoint {
    let mut out = ZenoPoint {
        gamma,
        gamma_t: gamma * s.total_time,
        uniform_channel: uniform,
        success: f64::NAN,
        lz_populations: (f64::NAN, f64::NAN),
        lz_purity: f64::NAN,
        lz_distance_to_mixed: f64::NAN,
        min_eig: f64::NAN,
        error: None,
    };
    match open_system_run(config, p, s, gamma, uniform) {
        Ok(traj) => {
            let r = traj.last();
            let norm = r.p_ground + r.p_excited;
            let c2 = r.coherence_re.powi(2) + r.coherence_im.powi(2);
            out.success = r.p_ground;
            out.lz_populations = r.lz_populations();
            out.lz_purity = (r.p_ground.powi(2) + r.p_excited.powi(2) + 2.0 * c2) / (norm * norm);
            out.lz_distance_to_mixed = r.lz_distance_to_mixed();
            out.min_eig = r.min_eig;
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

pub fn run_zeno_grover(config: &ExperimentConfig) -> Result<ZenoReport> {
    let p = config.problem()?;
    let s = config.build_schedule(&p)?;
    let mut gammas = if config.sweep.gamma.is_empty() {
        vec![config.gamma]
    } else {
        config.sweep.gamma.clone()
    };
    gammas.sort_by(f64::total_cmp);
    let mut jobs: Vec<(f64, bool)> = gammas.iter().map(|&g| (g, false)).collect();
    if config.uniform_channel {
        jobs.extend(gammas.iter().map(|&g| (g, true)));
    }
    let points: Vec<ZenoPoint> = jobs
        .par_iter()
        .map(|&(g, u)| point(config, &p, &s, g, u))
        .collect();
    let monotone = [false, true].iter().all(|&u| {
        let v: Vec<f64> = points
            .iter()
            .filter(|x| x.uniform_channel == u)
            .map(|x| x.success)
            .collect();
        v.windows(2).all(|w| w[1] <= w[0] + 1e-9)
    });
    Ok(ZenoReport {
        n: config.n,
        total_time: s.total_time,
        backend: config.backend,
        points,
        monotone,
    })
}

pub(super) fn write(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let r = run_zeno_grover(config)?;
    let rows: Vec<Vec<f64>> = r
        .points
        .iter()
        .map(|x| {
            vec![
                x.gamma,
                x.gamma_t,
                f64::from(u8::from(x.uniform_channel)),
                x.success,
                x.lz_populations.0,
                x.lz_populations.1,
                x.lz_purity,
                x.lz_distance_to_mixed,
            ]
        })
        .collect();
    dir.write_csv(
        "zeno_sweep.csv",
        &[
            "gamma",
            "gamma_T",
            "uniform_channel",
            "success",
            "lz_ground",
            "lz_excited",
            "lz_purity",
            "lz_distance_to_mixed",
        ],
        &rows,
    )?;
    let summary = serde_json::to_value(&r)?;
    dir.write_json("report.json", &summary)?;
    if let Some(bad) = r.points.iter().find(|x| x.error.is_some()) {
        return Err(Error::Numerical(format!(
            "sweep point Γ = {} failed: {}",
            bad.gamma,
            bad.error.as_deref().unwrap_or_default()
        )));
    }
    Ok(summary)
}
