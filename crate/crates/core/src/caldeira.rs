//! Frequency-driven oscillator coupled to a Lorentzian-type reservoir.
//!
//! The reservoir has spectral function `Γ(ω) = Γ₀ωω_c/(ω² + ω_c²)`, which
//! gives the exponential memory kernel `(Γ₀ω_c/2)e^{−ω_c t}` and an exact
//! three-variable time-local system for `(⟨x⟩, ⟨p⟩, B)`. Dimensionless
//! variables are `x̃ = √(2mΩ)x`, `p̃ = √(2/(mΩ))p`, `B̃ = √(2/(mΩ³))B` with
//! `α = Γ₀/(2mΩ²)` and `β = ω_c/Ω`.

use std::io::Write;

use dashu_float::{round::mode::HalfEven, FBig};
use nalgebra::{Matrix3, Vector3};
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{dopri5, rk4_step, OdeOptions};
use crate::quantum::C64;

/// Trap frequency protocol `Ω(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FrequencyDrive {
    Constant {
        omega: f64,
    },
    /// `Ω(t) = Ω₀(1 − r t)`
    LinearRamp {
        omega0: f64,
        rate: f64,
    },
}

impl FrequencyDrive {
    pub fn omega(&self, t: f64) -> f64 {
        match *self {
            FrequencyDrive::Constant { omega } => omega,
            FrequencyDrive::LinearRamp { omega0, rate } => omega0 * (1.0 - rate * t),
        }
    }

    pub fn omega_dot(&self, _t: f64) -> f64 {
        match *self {
            FrequencyDrive::Constant { .. } => 0.0,
            FrequencyDrive::LinearRamp { omega0, rate } => -omega0 * rate,
        }
    }

    /// Ω stays positive and `τ = Ω(t)t` stays increasing on `[0, horizon]`.
    fn check(&self, horizon: f64) -> Result<()> {
        let ends = [self.omega(0.0), self.omega(horizon)];
        if ends.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::param("omega", "trap frequency must stay positive"));
        }
        let factor = 1.0 + horizon * self.omega_dot(horizon) / self.omega(horizon);
        if !(factor > 0.0) {
            return Err(Error::param(
                "rate",
                format!("ramp too fast: 1 + τΩ̇/Ω² = {factor:.3e} at the horizon"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorBath {
    pub gamma0: f64,
    pub omega_c: f64,
    pub mass: f64,
    pub drive: FrequencyDrive,
}

impl OscillatorBath {
    pub fn new(gamma0: f64, omega_c: f64, mass: f64, omega: f64) -> Result<Self> {
        OscillatorBath {
            gamma0,
            omega_c,
            mass,
            drive: FrequencyDrive::Constant { omega },
        }
        .validated()
    }

    /// Bath with the given `(α, β)` at trap frequency `Ω` and mass `m`.
    pub fn from_dimensionless(alpha: f64, beta: f64, omega: f64, mass: f64) -> Result<Self> {
        Self::new(2.0 * mass * omega * omega * alpha, beta * omega, mass, omega)
    }

    pub fn with_drive(mut self, drive: FrequencyDrive) -> Self {
        self.drive = drive;
        self
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.gamma0 >= 0.0) || !self.gamma0.is_finite() {
            return Err(Error::param("gamma0", "must be non-negative"));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(Error::param("omega_c", "must be positive"));
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::param("mass", "must be positive"));
        }
        self.drive.check(0.0)?;
        Ok(self)
    }

    pub fn dimensionless(&self, t: f64) -> DimensionlessSystem {
        let w = self.drive.omega(t);
        DimensionlessSystem {
            alpha: self.gamma0 / (2.0 * self.mass * w * w),
            beta: self.omega_c / w,
        }
    }

    /// Physical `(x, p, B)` to `(x̃, p̃, B̃)` at time `t`.
    pub fn to_dimensionless(&self, t: f64, x: f64, p: f64, b: f64) -> [f64; 3] {
        let (m, w) = (self.mass, self.drive.omega(t));
        [
            (2.0 * m * w).sqrt() * x,
            (2.0 / (m * w)).sqrt() * p,
            (2.0 / (m * w * w * w)).sqrt() * b,
        ]
    }

    pub fn from_dimensionless_state(&self, t: f64, r: [f64; 3]) -> (f64, f64, f64) {
        let (m, w) = (self.mass, self.drive.omega(t));
        (
            r[0] / (2.0 * m * w).sqrt(),
            r[1] / (2.0 / (m * w)).sqrt(),
            r[2] / (2.0 / (m * w * w * w)).sqrt(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessSystem {
    pub alpha: f64,
    pub beta: f64,
}

impl DimensionlessSystem {
    pub fn matrix(&self) -> Result<Matrix3<f64>> {
        m_matrix(self.alpha, self.beta)
    }
}

/// `Γ(ω) = Γ₀ωω_c/(ω² + ω_c²)`.
pub fn spectral_function(omega: f64, bath: &OscillatorBath) -> f64 {
    let c = bath.omega_c;
    bath.gamma0 * omega * c / (omega * omega + c * c)
}

/// `(Γ₀ω_c/2)e^{−ω_c t}`.
pub fn memory_kernel(t: f64, bath: &OscillatorBath) -> f64 {
    0.5 * bath.gamma0 * bath.omega_c * (-bath.omega_c * t).exp()
}

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Kernel as the sine transform `(1/π)∫₀^∞ Γ(ω) sin(ωt) dω`, by quadrature.
///
/// Uses `ω/(ω²+ω_c²) = 1/ω − ω_c²/(ω(ω²+ω_c²))`; the first piece is the
/// Dirichlet integral and the second decays as `ω⁻³`.
pub fn memory_kernel_from_spectrum(t: f64, bath: &OscillatorBath) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param("t", "sine transform needs t > 0"));
    }
    let s = t * bath.omega_c;
    let y_max = 1.0e4_f64.max(100.0 / s);
    let width = (0.5 / s).min(0.25);
    let panels = (y_max / width).ceil() as usize;
    let width = y_max / panels as f64;
    let f = |y: f64| (y * s).sin() / (y * (y * y + 1.0));
    let mut acc = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * width;
        let half = 0.5 * width;
        for &(x, w) in &GL8 {
            acc += w * half * (f(mid - half * x) + f(mid + half * x));
        }
    }
    // leading term of the oscillatory tail beyond y_max
    acc += (y_max * s).cos() / (s * y_max * (y_max * y_max + 1.0));
    Ok(bath.gamma0 * bath.omega_c / std::f64::consts::PI * (std::f64::consts::FRAC_PI_2 - acc))
}

/// `[[0,1,0],[−(1+α),0,1],[αβ,0,−β]]`.
pub fn m_matrix(alpha: f64, beta: f64) -> Result<Matrix3<f64>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "must be non-negative"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", "must be non-negative"));
    }
    #[rustfmt::skip]
    let m = Matrix3::new(
        0.0, 1.0, 0.0,
        -(1.0 + alpha), 0.0, 1.0,
        alpha * beta, 0.0, -beta,
    );
    Ok(m)
}

/// Numerical eigenvalues of `M`, real part descending.
pub fn m_eigenvalues(alpha: f64, beta: f64) -> Result<[C64; 3]> {
    let mut v: Vec<C64> = m_matrix(alpha, beta)?
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok([v[0], v[1], v[2]])
}

/// `β = 3√((α−2)/2)`, the curve with closed-form eigenvalues.
pub fn curve_beta(alpha: f64) -> f64 {
    3.0 * ((alpha - 2.0) / 2.0).sqrt()
}

/// β interval in which all eigenvalues are real and negative (`α > 8`).
pub fn real_window(alpha: f64) -> Option<(f64, f64)> {
    if !(alpha > 8.0) {
        return None;
    }
    let base = alpha * alpha + 20.0 * alpha - 8.0;
    let d = alpha.sqrt() * (alpha - 8.0).powf(1.5);
    let scale = 2f64.powf(1.5);
    Some(((base - d).sqrt() / scale, (base + d).sqrt() / scale))
}

/// `(λ₁, λ₂, λ₃)` on `β = 3√((α−2)/2)`.
pub fn analytic_eigenvalues_on_curve(alpha: f64) -> Result<[f64; 3]> {
    if !(alpha >= 8.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "closed form requires α ≥ 8"));
    }
    let a = (alpha - 8.0).sqrt();
    let b = (alpha - 2.0).sqrt();
    let r2 = std::f64::consts::SQRT_2;
    // λ₁ = (a − b)/√2 without cancellation
    Ok([-6.0 / (r2 * (a + b)), -b / r2, -(a + b) / r2])
}

/// Normalized right eigenvector `∝ (1, λ₁, α + 1 + λ₁²)`.
pub fn zeno_eigenvector(alpha: f64) -> Result<Vector3<f64>> {
    let l1 = analytic_eigenvalues_on_curve(alpha)?[0];
    Ok(Vector3::new(1.0, l1, alpha + 1.0 + l1 * l1).normalize())
}

type Big = FBig<HalfEven, 2>;

fn big(x: f64, bits: usize) -> Result<Big> {
    Big::try_from(x)
        .map(|v| v.with_precision(bits).value())
        .map_err(|_| Error::NonFinite)
}

fn big_sqrt(x: &Big) -> Big {
    x.context().sqrt(x.repr()).value()
}

fn to_f64(x: &Big) -> f64 {
    x.to_f64().value()
}

/// Roots of `det(λ − M) = λ³ + βλ² + (1+α)λ + β` on the closed-form curve,
/// computed in `bits`-bit arithmetic so that the triple root at `α = 8` is
/// resolved. Real part descending.
pub fn curve_eigenvalues_extended(alpha: f64, bits: usize) -> Result<[C64; 3]> {
    if !(alpha >= 2.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "curve requires α ≥ 2"));
    }
    if bits < 64 {
        return Err(Error::param("bits", "use at least 64 bits"));
    }
    let one = big(1.0, bits)?;
    let a = big(alpha, bits)?;
    let beta = big(3.0, bits)? * big_sqrt(&((&a - big(2.0, bits)?) / big(2.0, bits)?));
    let c1 = &one + &a;
    let p = |l: &Big| ((l + &beta) * l + &c1) * l + &beta;
    let dp = |l: &Big| (big(3.0, bits).unwrap() * l + big(2.0, bits).unwrap() * &beta) * l + &c1;
    // Newton from the left of every root climbs monotonically to the
    // leftmost real root.
    let bound = 2.0 + to_f64(&beta).max(alpha + 1.0);
    let mut l = big(-bound, bits)?;
    let tiny = big(2f64.powi(-(bits as i32 - 16).min(1000)), bits)?;
    for _ in 0..20 * bits {
        let pv = p(&l);
        if pv >= Big::ZERO {
            break;
        }
        let step = &pv / &dp(&l);
        l = &l - &step;
        if -step <= tiny {
            break;
        }
    }
    let r = l;
    let b = &beta + &r;
    let c = &c1 + &r * &b;
    let disc = &b * &b - big(4.0, bits)? * &c;
    let (bf, df) = (to_f64(&b), to_f64(&disc));
    let (q1, q2) = if df >= 0.0 {
        let s = df.sqrt();
        (C64::new((-bf + s) / 2.0, 0.0), C64::new((-bf - s) / 2.0, 0.0))
    } else {
        let s = (-df).sqrt();
        (C64::new(-bf / 2.0, s / 2.0), C64::new(-bf / 2.0, -s / 2.0))
    };
    let mut v = vec![C64::new(to_f64(&r), 0.0), q1, q2];
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok([v[0], v[1], v[2]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSample {
    pub t: f64,
    /// `τ = Ω(t)·t`
    pub tau: f64,
    pub x: f64,
    pub p: f64,
    pub b: f64,
    /// `(x̃, p̃, B̃)`
    pub r: [f64; 3],
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OscillatorTrajectory {
    pub samples: Vec<OscillatorSample>,
}

impl OscillatorTrajectory {
    pub const CSV_HEADER: &'static str = "tau,x_tilde,p_tilde,b_tilde";

    fn push(&mut self, bath: &OscillatorBath, t: f64, x: f64, p: f64, b: f64) {
        self.samples.push(OscillatorSample {
            t,
            tau: bath.drive.omega(t) * t,
            x,
            p,
            b,
            r: bath.to_dimensionless(t, x, p, b),
        });
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{}",
                crate::dynamics::fmt_f64(s.tau),
                crate::dynamics::fmt_f64(s.r[0]),
                crate::dynamics::fmt_f64(s.r[1]),
                crate::dynamics::fmt_f64(s.r[2])
            )?;
        }
        Ok(())
    }

    /// Largest deviation in `(x̃, p̃)` against another trajectory on the same
    /// sample times.
    pub fn max_deviation(&self, other: &OscillatorTrajectory) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                found: other.samples.len(),
            });
        }
        let mut worst = 0.0f64;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            if (a.t - b.t).abs() > 1e-9 * a.t.abs().max(1.0) {
                return Err(Error::Numerical("sample times differ".into()));
            }
            worst = worst.max((a.r[0] - b.r[0]).abs()).max((a.r[1] - b.r[1]).abs());
        }
        Ok(worst)
    }
}

fn check_inputs(bath: &OscillatorBath, x0: f64, p0: f64, horizon: f64, samples: usize) -> Result<()> {
    bath.validated()?;
    if !x0.is_finite() || !p0.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon", "must be positive"));
    }
    if samples == 0 {
        return Err(Error::param("samples", "need at least one output sample"));
    }
    bath.drive.check(horizon)
}

/// Time-local enlarged system `ṗ = −(mΩ² + Γ₀/2)x + B`, `ẋ = p/m`,
/// `Ḃ = (Γ₀ω_c/2)x − ω_c B`, `B(0) = 0`, sampled at `samples` even steps.
pub fn evolve_local(
    bath: &OscillatorBath,
    x0: f64,
    p0: f64,
    horizon: f64,
    samples: usize,
) -> Result<OscillatorTrajectory> {
    check_inputs(bath, x0, p0, horizon, samples)?;
    let b = *bath;
    let rhs = move |t: f64, y: &Array1<f64>| -> Result<Array1<f64>> {
        let w = b.drive.omega(t);
        let (x, p, bb) = (y[0], y[1], y[2]);
        Ok(ndarray::arr1(&[
            p / b.mass,
            -(b.mass * w * w + 0.5 * b.gamma0) * x + bb,
            0.5 * b.gamma0 * b.omega_c * x - b.omega_c * bb,
        ]))
    };
    let stops: Vec<f64> = (1..=samples)
        .map(|k| horizon * k as f64 / samples as f64)
        .collect();
    let mut traj = OscillatorTrajectory::default();
    traj.push(bath, 0.0, x0, p0, 0.0);
    let opts = OdeOptions::with_tolerances(1e-13, 1e-12);
    dopri5(
        rhs,
        0.0,
        ndarray::arr1(&[x0, p0, 0.0]),
        &stops,
        &opts,
        |t, y, stop| {
            if stop.is_some() {
                traj.push(bath, t, y[0], y[1], y[2]);
            }
            Ok(())
        },
    )?;
    Ok(traj)
}

/// The dimensionless equation `(1 + τΩ̇/Ω²) dr/dτ = M r` with `τ = Ω(t)t`,
/// integrated in `t` as `dr/dt = Ω(t) M(t) r`. For constant Ω this is
/// `r(τ) = exp(Mτ) r₀`.
pub fn evolve_scaled(
    bath: &OscillatorBath,
    r0: [f64; 3],
    horizon: f64,
    samples: usize,
) -> Result<Vec<(f64, [f64; 3])>> {
    check_inputs(bath, r0[0], r0[1], horizon, samples)?;
    let b = *bath;
    let rhs = move |t: f64, y: &Array1<f64>| -> Result<Array1<f64>> {
        let m = b.dimensionless(t).matrix()?;
        let v = m * Vector3::new(y[0], y[1], y[2]) * b.drive.omega(t);
        Ok(ndarray::arr1(&[v.x, v.y, v.z]))
    };
    let stops: Vec<f64> = (1..=samples)
        .map(|k| horizon * k as f64 / samples as f64)
        .collect();
    let mut out = vec![(0.0, r0)];
    let opts = OdeOptions::with_tolerances(1e-13, 1e-12);
    dopri5(rhs, 0.0, ndarray::arr1(&r0), &stops, &opts, |t, y, stop| {
        if stop.is_some() {
            out.push((bath.drive.omega(t) * t, [y[0], y[1], y[2]]));
        }
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Fixed RK4 step; defaults to `0.01 / max(Ω√(1+α), ω_c)`.
    pub step: Option<f64>,
    /// History is truncated at `cutoff / ω_c`.
    pub cutoff: f64,
    /// Maximum number of stored history points.
    pub history_budget: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            step: None,
            cutoff: 40.0,
            history_budget: 20_000_000,
        }
    }
}

/// `J_k(a) = ∫₀¹ s^k e^{−a s} ds` for `k = 0..=3`.
fn exp_moments(a: f64) -> [f64; 4] {
    let mut j = [0.0; 4];
    if a < 2.0 {
        for (k, jk) in j.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut acc = 0.0;
            for n in 0..60 {
                let add = term / (k + n + 1) as f64;
                acc += add;
                if add.abs() < 1e-18 * acc.abs() {
                    break;
                }
                term *= -a / (n + 1) as f64;
            }
            *jk = acc;
        }
    } else {
        let e = (-a).exp();
        j[0] = -(-a).exp_m1() / a;
        for k in 1..4 {
            j[k] = (k as f64 * j[k - 1] - e) / a;
        }
    }
    j
}

/// Weights of `∫₀^L e^{−c v} x dv` for a cubic Hermite `x` on an interval of
/// length `L`, with `v = 0` at the newer end: `(new, new', old, old')`.
fn hermite_weights(c: f64, len: f64) -> [f64; 4] {
    let j = exp_moments(c * len);
    [
        len * (2.0 * j[3] - 3.0 * j[2] + j[0]),
        -len * len * (j[3] - 2.0 * j[2] + j[1]),
        len * (-2.0 * j[3] + 3.0 * j[2]),
        -len * len * (j[3] - j[2]),
    ]
}

/// Integro-differential form
/// `ṗ = −(mΩ² + Γ₀/2)x + ∫₀ᵗ (Γ₀ω_c/2)e^{−ω_c(t−s)} x(s) ds`, `ẋ = p/m`,
/// with the memory integral evaluated over the stored history.
///
/// History quadrature: product integration against the exact exponential
/// weights with `x` interpolated as a cubic Hermite spline (using `ẋ = p/m`),
/// truncated at `cutoff/ω_c`.
pub fn evolve_kernel(
    bath: &OscillatorBath,
    x0: f64,
    p0: f64,
    horizon: f64,
    samples: usize,
    opts: &KernelOptions,
) -> Result<OscillatorTrajectory> {
    check_inputs(bath, x0, p0, horizon, samples)?;
    let c = bath.omega_c;
    let m = bath.mass;
    let h_target = match opts.step {
        Some(h) if h > 0.0 => h,
        Some(_) => return Err(Error::param("step", "must be positive")),
        None => {
            let w_max = (0..=16)
                .map(|k| bath.drive.omega(horizon * k as f64 / 16.0))
                .fold(0.0f64, f64::max);
            let fast = (w_max * w_max + bath.gamma0 / (2.0 * m)).sqrt().max(c);
            0.01 / fast
        }
    };
    let per_sample = ((horizon / samples as f64) / h_target).ceil().max(1.0) as usize;
    let steps = per_sample * samples;
    let h = horizon / steps as f64;
    if steps + 1 > opts.history_budget {
        return Err(Error::HistoryExhausted {
            needed: steps + 1,
            budget: opts.history_budget,
        });
    }
    let window = ((opts.cutoff / (c * h)).ceil() as usize).max(1);
    let decay: Vec<f64> = (0..window).map(|k| (-c * h * k as f64).exp()).collect();
    let w_full = hermite_weights(c, h);
    let w_half = hermite_weights(c, 0.5 * h);
    let e_half = (-0.5 * c * h).exp();
    let e_full = (-c * h).exp();
    let k0 = 0.5 * bath.gamma0 * c;

    let mut xs = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    xs.push(x0);
    vs.push(p0 / m);
    let mut traj = OscillatorTrajectory::default();
    traj.push(bath, 0.0, x0, p0, 0.0);
    let mut y = ndarray::arr1(&[x0, p0]);

    // memory integral over the stored grid, up to the newest point
    let settled = |xs: &[f64], vs: &[f64]| -> f64 {
        let n = xs.len() - 1;
        let mut acc = 0.0;
        for (k, d) in decay.iter().enumerate().take(n.min(window)) {
            let (i, j) = (n - k, n - k - 1);
            acc += d * (w_full[0] * xs[i] + w_full[1] * vs[i] + w_full[2] * xs[j] + w_full[3] * vs[j]);
        }
        acc
    };

    for step in 0..steps {
        let tn = step as f64 * h;
        let s_n = settled(&xs, &vs);
        let (xn, vn) = (xs[step], vs[step]);
        let rhs = |t: f64, y: &Array1<f64>| -> Result<Array1<f64>> {
            let (x, p) = (y[0], y[1]);
            let v = p / m;
            // stage offset in half steps: 0, 1 or 2
            let halves = (2.0 * (t - tn) / h).round();
            let partial = if halves == 0.0 {
                s_n
            } else {
                let (w, e) = if halves == 2.0 {
                    (&w_full, e_full)
                } else {
                    (&w_half, e_half)
                };
                w[0] * x + w[1] * v + w[2] * xn + w[3] * vn + e * s_n
            };
            let omega = bath.drive.omega(t);
            let force = -(m * omega * omega + 0.5 * bath.gamma0) * x + k0 * partial;
            Ok(ndarray::arr1(&[v, force]))
        };
        y = rk4_step(rhs, tn, &y, h)?;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        xs.push(y[0]);
        vs.push(y[1] / m);
        if (step + 1) % per_sample == 0 {
            let t = (step + 1) as f64 * h;
            let b = k0 * settled(&xs, &vs);
            traj.push(bath, t, y[0], y[1], b);
        }
    }
    Ok(traj)
}

/// Sweep summary: eigenvalues of `M` and, optionally, a fitted decay rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSummary {
    pub alpha: f64,
    pub beta: f64,
    pub eigenvalues: [[f64; 2]; 3],
    pub fitted_decay_rate: Option<f64>,
}

pub fn eigen_summary(alpha: f64, beta: f64) -> Result<EigenSummary> {
    let e = m_eigenvalues(alpha, beta)?;
    Ok(EigenSummary {
        alpha,
        beta,
        eigenvalues: [[e[0].re, e[0].im], [e[1].re, e[1].im], [e[2].re, e[2].im]],
        fitted_decay_rate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bath(alpha: f64, beta: f64) -> OscillatorBath {
        OscillatorBath::from_dimensionless(alpha, beta, 1.0, 1.0).unwrap()
    }

    #[test]
    fn spectral_and_kernel_examples() {
        let b = OscillatorBath::new(2.0, 3.0, 1.0, 1.0).unwrap();
        assert_eq!(spectral_function(0.0, &b), 0.0);
        assert!((spectral_function(3.0, &b) - 1.0).abs() < 1e-15);
        assert!((spectral_function(1e8, &b) * 1e8 / (2.0 * 3.0) - 1.0).abs() < 1e-12);
        assert!((memory_kernel(0.0, &b) - 3.0).abs() < 1e-15);
        assert!((memory_kernel(1.0 / 3.0, &b) - 3.0 / std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn sine_transform_reproduces_kernel() {
        let b = OscillatorBath::new(1.3, 2.0, 1.0, 1.0).unwrap();
        for s in [0.1, 0.3, 1.0, 2.5, 5.0, 10.0] {
            let t = s / b.omega_c;
            let num = memory_kernel_from_spectrum(t, &b).unwrap();
            let exact = memory_kernel(t, &b);
            assert!((num / exact - 1.0).abs() < 1e-6, "s={s}: {num} vs {exact}");
        }
    }

    #[test]
    fn m_matrix_trace_and_determinant() {
        assert!(m_matrix(-1.0, 1.0).is_err());
        let m = m_matrix(0.0, 0.0).unwrap();
        assert!((m + m.transpose()).fixed_view::<2, 2>(0, 0).norm() < 1e-15);
        for (a, b) in [(0.5, 2.0), (18.0, 6.0), (100.0, 0.1)] {
            let m = m_matrix(a, b).unwrap();
            assert!((m.trace() + b).abs() < 1e-12);
            assert!((m.determinant() + b).abs() < 1e-9 * (1.0 + a * b));
        }
    }

    #[test]
    fn curve_eigenvalues() {
        let l = analytic_eigenvalues_on_curve(18.0).unwrap();
        let s10 = 10f64.sqrt();
        let r2 = 2f64.sqrt();
        assert!((l[0] - (s10 - 4.0) / r2).abs() < 1e-14);
        assert!((l[1] + 2.0 * r2).abs() < 1e-14);
        assert!((l[2] + (s10 + 4.0) / r2).abs() < 1e-14);
        let num = m_eigenvalues(18.0, curve_beta(18.0)).unwrap();
        for k in 0..3 {
            assert!((num[k] - C64::new(l[k], 0.0)).norm() < 1e-10);
        }
        let l = analytic_eigenvalues_on_curve(8.0).unwrap();
        for v in l {
            assert!((v + 3f64.sqrt()).abs() < 1e-15);
        }
        assert!(analytic_eigenvalues_on_curve(7.9).is_err());
        let l = analytic_eigenvalues_on_curve(5000.0).unwrap();
        assert!((l[0] / (-3.0 / (2.0f64 * 5000.0).sqrt()) - 1.0).abs() < 0.01);
    }

    #[test]
    fn extended_precision_resolves_triple_root() {
        for alpha in [8.0, 18.0, 100.0] {
            let l = analytic_eigenvalues_on_curve(alpha).unwrap();
            let e = curve_eigenvalues_extended(alpha, 320).unwrap();
            for k in 0..3 {
                assert!(
                    (e[k] - C64::new(l[k], 0.0)).norm() < 1e-10,
                    "α={alpha} {e:?} {l:?}"
                );
            }
        }
    }

    #[test]
    fn zeno_eigenvector_residual() {
        for alpha in [8.0, 18.0, 100.0] {
            let v = zeno_eigenvector(alpha).unwrap();
            let l1 = analytic_eigenvalues_on_curve(alpha).unwrap()[0];
            let m = m_matrix(alpha, curve_beta(alpha)).unwrap();
            assert!((m * v - v * l1).norm() <= 1e-9);
        }
        let v = zeno_eigenvector(18.0).unwrap();
        assert!((v.y.abs() / v.z.abs() - 0.0306).abs() < 5e-4);
        assert!(zeno_eigenvector(1e6).unwrap().y.abs() < zeno_eigenvector(100.0).unwrap().y.abs());
    }

    #[test]
    fn real_window_interior_is_real() {
        for alpha in [9.0, 18.0, 100.0, 1000.0] {
            let (lo, hi) = real_window(alpha).unwrap();
            for k in 1..10 {
                let beta = lo + (hi - lo) * k as f64 / 10.0;
                let e = m_eigenvalues(alpha, beta).unwrap();
                assert!(
                    e.iter().all(|z| z.im.abs() <= 1e-10 && z.re < 0.0),
                    "{alpha} {beta} {e:?}"
                );
            }
        }
        assert!(real_window(8.0).is_none());
    }

    #[test]
    fn local_matches_matrix_exponential() {
        let bath = unit_bath(3.0, 2.0);
        let traj = evolve_local(&bath, 0.4, -0.2, 20.0, 40).unwrap();
        let m = m_matrix(3.0, 2.0).unwrap();
        let r0 = Vector3::from(traj.samples[0].r);
        for s in &traj.samples {
            let e = (m * s.tau).exp() * r0;
            assert!((Vector3::from(s.r) - e).norm() < 1e-8);
        }
        let scaled = evolve_scaled(&bath, traj.samples[0].r, 20.0, 40).unwrap();
        for (s, (tau, r)) in traj.samples.iter().zip(&scaled) {
            assert!((s.tau - tau).abs() < 1e-12);
            assert!((Vector3::from(s.r) - Vector3::from(*r)).norm() < 1e-9);
        }
    }

    #[test]
    fn undamped_oscillator() {
        let bath = unit_bath(0.0, 1.0);
        let traj = evolve_local(&bath, 1.0, 0.0, 10.0, 20).unwrap();
        for s in &traj.samples {
            assert!(s.r[2] == 0.0 && (s.x - s.t.cos()).abs() < 1e-9);
        }
        let k = evolve_kernel(&bath, 1.0, 0.0, 10.0, 20, &KernelOptions::default()).unwrap();
        for s in &k.samples {
            let e = 0.5 * s.p * s.p + 0.5 * s.x * s.x;
            assert!((e - 0.5).abs() < 1e-7);
        }
    }

    #[test]
    fn kernel_matches_local_small() {
        let bath = unit_bath(1.0, 1.0);
        let a = evolve_local(&bath, 0.5, 0.1, 20.0, 40).unwrap();
        let b = evolve_kernel(&bath, 0.5, 0.1, 20.0, 40, &KernelOptions::default()).unwrap();
        let dev = a.max_deviation(&b).unwrap();
        assert!(dev < 1e-6, "deviation {dev:e}");
        for (s, u) in a.samples.iter().zip(&b.samples) {
            assert!((s.b - u.b).abs() < 1e-6);
        }
    }

    #[test]
    fn kernel_follows_ramp() {
        let bath = unit_bath(2.0, 1.5).with_drive(FrequencyDrive::LinearRamp {
            omega0: 1.0,
            rate: 0.02,
        });
        let a = evolve_local(&bath, 0.5, 0.0, 10.0, 20).unwrap();
        let b = evolve_kernel(&bath, 0.5, 0.0, 10.0, 20, &KernelOptions::default()).unwrap();
        let dev = a.max_deviation(&b).unwrap();
        assert!(dev < 1e-6, "deviation {dev:e}");
        let fast = unit_bath(2.0, 1.5).with_drive(FrequencyDrive::LinearRamp {
            omega0: 1.0,
            rate: 0.2,
        });
        assert!(evolve_local(&fast, 0.5, 0.0, 10.0, 20).is_err());
    }

    #[test]
    fn history_budget_enforced() {
        let bath = unit_bath(1.0, 1.0);
        let opts = KernelOptions {
            history_budget: 100,
            ..KernelOptions::default()
        };
        assert!(matches!(
            evolve_kernel(&bath, 1.0, 0.0, 50.0, 10, &opts),
            Err(Error::HistoryExhausted { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let bath = unit_bath(1.0, 1.0);
        let traj = evolve_local(&bath, 1.0, 0.0, 1.0, 2).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("tau,x_tilde,p_tilde,b_tilde\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
