use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::zeno::open_system_run;
use super::{Backend, ExperimentConfig, RunDirectory};
use crate::bloch::{
    bloch_eigenvalues, bloch_matrix, closed_form_eigenvalues, entropy_production, zeno_survival,
    BlochVariant, ZenoSurvival,
};
use crate::caldeira::{
    eigen_summary, evolve_kernel, evolve_local, FrequencyDrive, KernelOptions, OscillatorBath,
};
use crate::dynamics::{
    evolve, redfield_evolve, Drive, EvolveOptions, HamiltonianModel, RedfieldOptions, ShortMemoryRate,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::grover::gap;
use crate::integrate::OdeOptions;
use crate::perturbation::{
    joint_exact_evolve, second_order_error, BathLink, JointBathSpec, JointOptions, PropagatorKind,
    Quadrature, SecondOrderOptions,
};
use crate::quantum::{
    pauli_operator, random_density, random_hermitian, Axis, DensityMatrix, HermitianOperator,
};

pub fn run_schedule(config: &ExperimentConfig) -> Result<Vec<[f64; 4]>> {
    let p = config.problem()?;
    let s = config.build_schedule(&p)?;
    let m = config.f_points;
    (0..m)
        .map(|k| {
            let t = s.total_time * k as f64 / (m - 1) as f64;
            let f = s.f(t)?;
            Ok([t, f, s.fdot(t)?, gap(&p, f)?])
        })
        .collect()
}

pub(super) fn write_schedule(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let rows = run_schedule(config)?;
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    dir.write_csv("schedule.csv", &["t", "f", "fdot", "gap"], &rows)?;
    let total = rows.last().map_or(0.0, |r| r[0]);
    let summary = serde_json::json!({ "total_time": total, "points": rows.len() });
    dir.write_json("report.json", &summary)?;
    Ok(summary)
}

fn z_couplings(n: usize) -> Result<Vec<HermitianOperator>> {
    (0..n).map(|q| pauli_operator(Axis::Z, q, n)).collect()
}

/// One open-system trajectory under the configured backend, started in `|s⟩`.
pub fn run_evolve(config: &ExperimentConfig) -> Result<Trajectory> {
    let p = config.problem()?;
    let s = config.build_schedule(&p)?;
    match config.backend {
        Backend::Lindblad | Backend::Coarse => {
            open_system_run(config, &p, &s, config.gamma, config.uniform_channel)
        }
        Backend::Redfield | Backend::Singular => {
            if config.dim.is_some() {
                return Err(Error::param("dim", "bath-driven backends need a qubit register"));
            }
            let couplings = z_couplings(config.n)?;
            let rho0 = DensityMatrix::pure(&p.uniform_state())?;
            if config.backend == Backend::Redfield {
                let dt = RedfieldOptions::default().dt;
                let steps = (s.total_time / dt).ceil() as usize;
                let opts = RedfieldOptions {
                    record_every: (steps / config.records.max(1)).max(1),
                    ..Default::default()
                };
                redfield_evolve(
                    &HamiltonianModel::Grover(p),
                    &couplings,
                    &config.bath,
                    p.omega,
                    &rho0,
                    Drive::Schedule(&s),
                    &opts,
                )
            } else {
                let sc = ShortMemoryRate::generator(
                    &config.bath,
                    p.omega,
                    &couplings,
                    HamiltonianModel::Grover(p),
                )?;
                let opts = EvolveOptions {
                    ode: OdeOptions::with_tolerances(1e-10, 1e-8),
                    records: config.records,
                    spectral_every: 10,
                    ..Default::default()
                };
                evolve(&sc.generator, &rho0, Drive::Schedule(&s), &opts)
            }
        }
    }
}

pub(super) fn write_evolve(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let traj = run_evolve(config)?;
    dir.write_text("trajectory.csv", &traj.to_csv_string()?)?;
    let last = traj.last();
    let summary = serde_json::json!({
        "backend": config.backend,
        "success": last.p_ground,
        "lz_distance_to_mixed": last.lz_distance_to_mixed(),
        "final_trace": last.trace,
        "warnings": traj.warnings,
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
    });
    dir.write_json("report.json", &summary)?;
    Ok(summary)
}

/// Eigenvalues at one `Γ/Ω`: numeric `(λ₀, λ₊, λ₋)` matched to the closed
/// form, and the largest deviation between the two.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlochSweepRow {
    pub ratio: f64,
    pub numeric: [[f64; 2]; 3],
    pub closed_form: [[f64; 2]; 3],
    pub max_deviation: f64,
    pub max_real_part: f64,
}

/// `variant` with its rate(s) rescaled so the leading rate is `ratio·Ω`.
fn with_ratio(variant: BlochVariant, ratio: f64) -> BlochVariant {
    let o = variant.omega();
    match variant {
        BlochVariant::DephasingZ { .. } => BlochVariant::DephasingZ {
            omega: o,
            gamma: ratio * o,
        },
        BlochVariant::TwoProjectors { gamma1, gamma2, .. } => {
            let r = if gamma1 > 0.0 { gamma2 / gamma1 } else { 1.0 };
            BlochVariant::TwoProjectors {
                omega: o,
                gamma1: ratio * o,
                gamma2: r * ratio * o,
            }
        }
        BlochVariant::Relaxation { .. } => BlochVariant::Relaxation {
            omega: o,
            sigma: ratio * o,
        },
    }
}

pub fn bloch_eigenvalue_sweep(
    variant: BlochVariant,
    ratio_min: f64,
    ratio_max: f64,
    points: usize,
) -> Result<Vec<BlochSweepRow>> {
    let (a, b) = (ratio_min.ln(), ratio_max.ln());
    (0..points)
        .map(|k| {
            let ratio = (a + (b - a) * k as f64 / (points - 1).max(1) as f64).exp();
            let v = with_ratio(variant, ratio);
            let m = bloch_matrix(v)?;
            let num = bloch_eigenvalues(&m);
            let (l0, lp, lm) = closed_form_eigenvalues(v);
            let cf = [l0, lp, lm];
            // pair each closed-form value with its nearest numeric eigenvalue
            let mut used = [false; 3];
            let mut numeric = [[0.0; 2]; 3];
            let mut dev: f64 = 0.0;
            for (i, c) in cf.iter().enumerate() {
                let j = (0..3)
                    .filter(|&j| !used[j])
                    .min_by(|&x, &y| (num[x] - c).norm().total_cmp(&(num[y] - c).norm()))
                    .unwrap_or(i);
                used[j] = true;
                numeric[i] = [num[j].re, num[j].im];
                dev = dev.max((num[j] - c).norm() / c.norm().max(v.omega()));
            }
            Ok(BlochSweepRow {
                ratio,
                numeric,
                closed_form: cf.map(|z| [z.re, z.im]),
                max_deviation: dev,
                max_real_part: m.max_real_part(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BlochReport {
    pub sweep: Vec<BlochSweepRow>,
    /// `(measurements, survival, transition, N(ΩΔt)²)` at total angle π/2.
    pub projective: Vec<[f64; 4]>,
    /// Smallest entropy production over the random `(ρ, L)` samples.
    pub min_entropy_production: f64,
    pub entropy_samples: usize,
}

pub fn run_bloch(config: &ExperimentConfig) -> Result<BlochReport> {
    let b = &config.bloch;
    let sweep = bloch_eigenvalue_sweep(b.variant, b.ratio_min, b.ratio_max, b.points)?;
    let omega = b.variant.omega();
    let projective = b
        .measurements
        .iter()
        .map(|&n| {
            let dt = std::f64::consts::FRAC_PI_2 / (n as f64 * omega);
            let z = zeno_survival(&ZenoSurvival { omega, dt, n_meas: n })?;
            Ok([
                n as f64,
                z.survival,
                z.transition,
                n as f64 * (omega * dt).powi(2),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut min_prod = f64::INFINITY;
    for k in 0..b.entropy_samples {
        let dim = if k % 2 == 0 { 2 } else { 4 };
        let rho = random_density(dim, &mut rng);
        let l = random_hermitian(dim, &mut rng);
        min_prod = min_prod.min(entropy_production(&rho, &l)?);
    }
    Ok(BlochReport {
        sweep,
        projective,
        min_entropy_production: min_prod,
        entropy_samples: b.entropy_samples,
    })
}

pub(super) fn write_bloch(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let r = run_bloch(config)?;
    let rows: Vec<Vec<f64>> = r
        .sweep
        .iter()
        .map(|x| {
            vec![
                x.ratio,
                x.numeric[0][0],
                x.numeric[1][0],
                x.numeric[2][0],
                x.numeric[1][1],
                x.numeric[2][1],
                x.max_deviation,
            ]
        })
        .collect();
    dir.write_csv(
        "bloch_eigenvalues.csv",
        &[
            "Gamma_over_Omega",
            "Re_l0",
            "Re_lplus",
            "Re_lminus",
            "Im_lplus",
            "Im_lminus",
            "max_deviation",
        ],
        &rows,
    )?;
    let rows: Vec<Vec<f64>> = r.projective.iter().map(|x| x.to_vec()).collect();
    dir.write_csv(
        "projective_zeno.csv",
        &["measurements", "survival", "transition", "small_angle"],
        &rows,
    )?;
    let summary = serde_json::json!({
        "variant": config.bloch.variant,
        "max_deviation": r.sweep.iter().map(|x| x.max_deviation).fold(0.0, f64::max),
        "max_real_part": r.sweep.iter().map(|x| x.max_real_part).fold(f64::NEG_INFINITY, f64::max),
        "min_entropy_production": r.min_entropy_production,
        "entropy_samples": r.entropy_samples,
    });
    dir.write_json("report.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillatorReport {
    pub local: crate::caldeira::OscillatorTrajectory,
    pub kernel: Option<crate::caldeira::OscillatorTrajectory>,
    pub max_deviation: Option<f64>,
    pub eigen: crate::caldeira::EigenSummary,
}

pub fn run_oscillator(config: &ExperimentConfig) -> Result<OscillatorReport> {
    let o = &config.oscillator;
    let mut bath = OscillatorBath::from_dimensionless(o.alpha, o.beta, o.omega, o.mass)?;
    if o.ramp_rate != 0.0 {
        bath = bath
            .with_drive(FrequencyDrive::LinearRamp {
                omega0: o.omega,
                rate: o.ramp_rate,
            })
            .validated()?;
    }
    let horizon = o.horizon / o.omega;
    let local = evolve_local(&bath, o.x0, o.p0, horizon, o.samples)?;
    let kernel = if o.kernel {
        Some(evolve_kernel(
            &bath,
            o.x0,
            o.p0,
            horizon,
            o.samples,
            &KernelOptions::default(),
        )?)
    } else {
        None
    };
    let max_deviation = kernel.as_ref().map(|k| local.max_deviation(k)).transpose()?;
    Ok(OscillatorReport {
        local,
        kernel,
        max_deviation,
        eigen: eigen_summary(o.alpha, o.beta)?,
    })
}

pub(super) fn write_oscillator(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let r = run_oscillator(config)?;
    let mut buf = Vec::new();
    r.local.write_csv(&mut buf)?;
    dir.write_text("oscillator_local.csv", &String::from_utf8_lossy(&buf))?;
    if let Some(k) = &r.kernel {
        let mut buf = Vec::new();
        k.write_csv(&mut buf)?;
        dir.write_text("oscillator_kernel.csv", &String::from_utf8_lossy(&buf))?;
    }
    let summary = serde_json::json!({
        "eigen": r.eigen,
        "max_deviation": r.max_deviation,
    });
    dir.write_json("report.json", &summary)?;
    Ok(summary)
}

/// Second-order estimate vs the exact joint evolution at one coupling.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerturbationRow {
    pub g: f64,
    pub predicted: f64,
    /// Excited population of the joint run minus its `g = 0` value.
    pub exact: f64,
    pub relative_mismatch: f64,
}

/// `σ_z` on every system qubit against `σ_x` of bath qubit `q mod k`.
fn dephasing_links(n: usize, k: usize) -> Vec<BathLink> {
    (0..n)
        .map(|q| BathLink {
            system_qubit: q,
            system_axis: Axis::Z,
            bath_qubit: q % k,
            bath_axis: Axis::X,
        })
        .collect()
}

pub fn run_perturbation(config: &ExperimentConfig) -> Result<Vec<PerturbationRow>> {
    if config.dim.is_some() {
        return Err(Error::param("dim", "the joint oracle needs a qubit register"));
    }
    let p = config.problem()?;
    let s = config.build_schedule(&p)?;
    let pc = &config.perturbation;
    let joint = JointBathSpec {
        splittings: pc.splittings.clone(),
        links: dephasing_links(config.n, pc.splittings.len()),
        excited: vec![],
    };
    let jopts = JointOptions {
        step: Some(pc.step),
        records: 4,
        snapshots: false,
    };
    let base = joint_exact_evolve(&p, &joint, 0.0, &s, &jopts)?.final_error;
    let gs = if config.sweep.g.is_empty() {
        vec![0.04, 0.02, 0.01]
    } else {
        config.sweep.g.clone()
    };
    let so = SecondOrderOptions {
        method: Quadrature::ExponentialSum,
        propagator: PropagatorKind::TimeOrdered,
        step: Some(pc.step),
        richardson: true,
        ..Default::default()
    };
    gs.iter()
        .map(|&g| {
            let exact = joint_exact_evolve(&p, &joint, g, &s, &jopts)?.final_error - base;
            let spec = joint.interaction_spec(g)?;
            let predicted = second_order_error(&spec, &p, &s, (0.0, s.total_time), &so)?.p_error;
            Ok(PerturbationRow {
                g,
                predicted,
                exact,
                relative_mismatch: (predicted - exact).abs() / exact.abs(),
            })
        })
        .collect()
}

pub(super) fn write_perturbation(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let rows = run_perturbation(config)?;
    let csv: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.g, r.predicted, r.exact, r.relative_mismatch])
        .collect();
    dir.write_csv(
        "perturbation.csv",
        &["g", "predicted", "exact", "relative_mismatch"],
        &csv,
    )?;
    let summary = serde_json::to_value(&rows)?;
    dir.write_json("report.json", &summary)?;
    Ok(summary)
}
