use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Generator, Operator};
use crate::error::{Error, Result};
use crate::grover::Schedule;
use crate::integrate::{dopri5, uniform_stops, OdeOptions, OdeStats};
use crate::quantum::{
    eigenvalues_hermitian, hermitize, inner, trace, vector_norm, CMatrix, CVector, DensityMatrix, C64, I,
};
use crate::tolerances::TOL;

/// What drives `f(t)` during an evolution.
#[derive(Debug, Clone, Copy)]
pub enum Drive<'a> {
    Schedule(&'a Schedule),
    /// Frozen Hamiltonian `H(f)` for a fixed duration.
    Fixed {
        f: f64,
        duration: f64,
    },
}

impl Drive<'_> {
    pub fn duration(&self) -> f64 {
        match self {
            Drive::Schedule(s) => s.total_time,
            Drive::Fixed { duration, .. } => *duration,
        }
    }

    pub fn f(&self, t: f64) -> Result<f64> {
        match self {
            Drive::Schedule(s) => s.f(t.min(s.total_time)),
            Drive::Fixed { f, .. } => Ok(*f),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    /// Number of uniformly spaced records after the initial one.
    pub records: usize,
    /// Spectral diagnostics (minimum eigenvalue, entropy) on every k-th
    /// record; they cost a full eigensolve of ρ.
    pub spectral_every: usize,
    /// Abort when the minimum eigenvalue drops below `−positivity_abort`.
    pub abort_on_positivity: bool,
    pub snapshots: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            records: 200,
            spectral_every: 1,
            abort_on_positivity: true,
            snapshots: false,
        }
    }
}

/// Observables recorded at one output time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub f: f64,
    pub p_ground: f64,
    pub p_excited: f64,
    /// `⟨ψ₀|ρ|ψ₁⟩` in the instantaneous eigenbasis.
    pub coherence_re: f64,
    pub coherence_im: f64,
    pub trace: f64,
    /// NaN where spectral diagnostics were skipped.
    pub min_eig: f64,
    pub entropy: f64,
    /// `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` for two-level systems.
    pub bloch: Option<[f64; 3]>,
}

impl Record {
    /// Trace distance of the normalized 2×2 block on `{ψ₀, ψ₁}` to `𝟙/2`.
    pub fn lz_distance_to_mixed(&self) -> f64 {
        let norm = self.p_ground + self.p_excited;
        if norm <= 0.0 {
            return f64::NAN;
        }
        let dz = 0.5 * (self.p_ground - self.p_excited) / norm;
        let c = (self.coherence_re.powi(2) + self.coherence_im.powi(2)).sqrt() / norm;
        (dz * dz + c * c).sqrt()
    }

    pub fn lz_populations(&self) -> (f64, f64) {
        let norm = self.p_ground + self.p_excited;
        (self.p_ground / norm, self.p_excited / norm)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub records: Vec<Record>,
    #[serde(serialize_with = "serialize_snapshots")]
    pub snapshots: Vec<(f64, CMatrix)>,
    pub warnings: Vec<String>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
    #[serde(skip)]
    pub final_state: Option<CMatrix>,
}

fn serialize_snapshots<S: serde::Serializer>(
    snaps: &[(f64, CMatrix)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Snap {
        t: f64,
        dim: usize,
        /// row-major `[re, im]` pairs
        data: Vec<[f64; 2]>,
    }
    let v: Vec<Snap> = snaps
        .iter()
        .map(|(t, m)| Snap {
            t: *t,
            dim: m.nrows(),
            data: m.iter().map(|z| [z.re, z.im]).collect(),
        })
        .collect();
    v.serialize(s)
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory has at least one record")
    }

    pub fn final_density(&self) -> Option<DensityMatrix> {
        self.final_state.clone().map(DensityMatrix::new_unchecked)
    }

    pub const CSV_HEADER: [&'static str; 7] =
        ["t", "f", "P_ground", "P_excited", "trace", "min_eig", "entropy"];

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        wtr.write_record(Self::CSV_HEADER)?;
        for r in &self.records {
            wtr.write_record(
                [r.t, r.f, r.p_ground, r.p_excited, r.trace, r.min_eig, r.entropy]
                    .iter()
                    .map(|&x| fmt_f64(x)),
            )?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self, metadata: serde_json::Value) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        v["metadata"] = metadata;
        Ok(v)
    }

    /// Largest entropy decrease between consecutive spectral records.
    pub fn max_entropy_drop(&self) -> f64 {
        let s: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.entropy)
            .filter(|x| x.is_finite())
            .collect();
        s.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

pub(crate) struct Recorder<'a> {
    pub levels: &'a dyn Fn(f64) -> Result<(CVector, CVector)>,
    pub spectral_every: usize,
    pub abort_on_positivity: bool,
    pub snapshots: bool,
}

impl Recorder<'_> {
    pub(crate) fn record(
        &self,
        index: usize,
        t: f64,
        f: f64,
        rho: &CMatrix,
        traj: &mut Trajectory,
    ) -> Result<()> {
        let (g, e) = (self.levels)(f)?;
        let rg = rho.dot(&g);
        let re_ = rho.dot(&e);
        let p_ground = inner(&g, &rg).re;
        let p_excited = inner(&e, &re_).re;
        let coh = inner(&g, &re_);
        let tr = trace(rho).re;
        let (min_eig, entropy) = if self.spectral_every > 0 && index % self.spectral_every == 0 {
            let values = eigenvalues_hermitian(rho);
            let s: f64 = values
                .iter()
                .filter(|&&p| p > TOL.entropy_floor)
                .map(|&p| -p * p.ln())
                .sum();
            (values[0], s.max(0.0))
        } else {
            (f64::NAN, f64::NAN)
        };
        if self.abort_on_positivity && min_eig < -TOL.positivity_abort {
            return Err(Error::PositivityViolation { t, min_eig });
        }
        let bloch = (rho.nrows() == 2).then(|| {
            [
                2.0 * rho[[0, 1]].re,
                -2.0 * rho[[0, 1]].im,
                (rho[[0, 0]] - rho[[1, 1]]).re,
            ]
        });
        traj.records.push(Record {
            t,
            f,
            p_ground,
            p_excited,
            coherence_re: coh.re,
            coherence_im: coh.im,
            trace: tr,
            min_eig,
            entropy,
            bloch,
        });
        if self.snapshots {
            traj.snapshots.push((t, rho.clone()));
        }
        Ok(())
    }
}

fn enrich(err: Error, drive: &Drive, gen: &dyn Generator) -> Error {
    match err {
        Error::StepSizeUnderflow { t, h, .. } => {
            let f = drive.f(t).ok();
            let gap = f.and_then(|f| gen.gap(f));
            Error::StepSizeUnderflow { t, h, f, gap }
        }
        other => other,
    }
}

/// Integrates `dρ/dt = 𝓛(ρ)` with adaptive Dormand–Prince steps.
///
/// After every accepted step ρ is replaced by `(ρ+ρ†)/2` and rescaled to unit
/// trace. Positivity is only monitored (at spectral records), never enforced.
pub fn evolve(
    gen: &dyn Generator,
    rho0: &DensityMatrix,
    drive: Drive,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: rho0.dim(),
        });
    }
    let duration = drive.duration();
    if !(duration > 0.0) {
        return Err(Error::param("duration", "must be positive"));
    }
    let levels = |f: f64| gen.levels(f);
    let recorder = Recorder {
        levels: &levels,
        spectral_every: opts.spectral_every,
        abort_on_positivity: opts.abort_on_positivity,
        snapshots: opts.snapshots,
    };
    let mut traj = Trajectory::default();
    recorder.record(0, 0.0, drive.f(0.0)?, rho0.matrix(), &mut traj)?;
    let stops = uniform_stops(0.0, duration, opts.records);
    let mut trace_warned = false;
    let result = dopri5(
        |t, rho: &CMatrix| gen.rhs(t, drive.f(t)?, rho),
        0.0,
        rho0.matrix().clone(),
        &stops,
        &opts.ode,
        |t, rho, stop| {
            let tr = trace(rho).re;
            if (tr - 1.0).abs() > TOL.trajectory_trace && !trace_warned {
                traj.warnings.push(format!(
                    "trace drifted to {tr:.12} at t={t:.6e} before renormalization"
                ));
                trace_warned = true;
            }
            let h = hermitize(rho);
            *rho = h * C64::new(1.0 / tr, 0.0);
            if let Some(k) = stop {
                recorder.record(k + 1, t, drive.f(t)?, rho, &mut traj)?;
            }
            Ok(())
        },
    );
    let (rho, stats): (CMatrix, OdeStats) = result.map_err(|e| enrich(e, &drive, gen))?;
    traj.steps_accepted = stats.accepted;
    traj.steps_rejected = stats.rejected;
    traj.rhs_evaluations = stats.evaluations;
    traj.final_state = Some(rho);
    Ok(traj)
}

/// Closed-system Schrödinger evolution of a pure state, recorded like
/// [`evolve`] (entropy 0, minimum eigenvalue 0).
pub fn evolve_pure(
    gen: &dyn Generator,
    psi0: &CVector,
    drive: Drive,
    opts: &EvolveOptions,
) -> Result<(CVector, Trajectory)> {
    if psi0.len() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: psi0.len(),
        });
    }
    let duration = drive.duration();
    let mut traj = Trajectory::default();
    let push = |t: f64, psi: &CVector, traj: &mut Trajectory| -> Result<()> {
        let f = drive.f(t)?;
        let (g, e) = gen.levels(f)?;
        let a = inner(&g, psi);
        let b = inner(&e, psi);
        let coh = a * b.conj();
        traj.records.push(Record {
            t,
            f,
            p_ground: a.norm_sqr(),
            p_excited: b.norm_sqr(),
            coherence_re: coh.re,
            coherence_im: coh.im,
            trace: vector_norm(psi).powi(2),
            min_eig: 0.0,
            entropy: 0.0,
            bloch: None,
        });
        Ok(())
    };
    push(0.0, psi0, &mut traj)?;
    let stops = uniform_stops(0.0, duration, opts.records);
    let (psi, stats) = dopri5(
        |t, psi: &CVector| {
            let h: Operator = gen.hamiltonian(drive.f(t)?)?;
            Ok(h.apply(psi) * (-I))
        },
        0.0,
        psi0.clone(),
        &stops,
        &opts.ode,
        |t, psi, stop| {
            let n = vector_norm(psi);
            *psi /= C64::new(n, 0.0);
            if stop.is_some() {
                push(t, psi, &mut traj)?;
            }
            Ok(())
        },
    )
    .map_err(|e| enrich(e, &drive, gen))?;
    traj.steps_accepted = stats.accepted;
    traj.steps_rejected = stats.rejected;
    traj.rhs_evaluations = stats.evaluations;
    Ok((psi, traj))
}
