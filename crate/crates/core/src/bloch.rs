//! Two-level laboratory: Bloch matrices, their spectra, projective Zeno
//! survival, entropy production and the strong-dissipation rate equation.
//!
//! Spin convention: `|↑⟩` is the `σ_z = +1` state (index 0), `H = Ωσ_y`, and
//! `⟨σ⟩ = (⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` with `ρ = (𝟙 + ⟨σ⟩·σ)/2`.

use nalgebra::{Matrix3, Vector3};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    eigenvalues_hermitian, hermitian_eigensystem, hermiticity_deviation, inner, re, Axis, CMatrix,
    DensityMatrix, HermitianOperator, C64, ONE, ZERO,
};
use crate::tolerances::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum BlochVariant {
    /// `L = √Γ σ_z`
    DephasingZ { omega: f64, gamma: f64 },
    /// `L₁ = √Γ₁ |↑⟩⟨↑|`, `L₂ = √Γ₂ |↓⟩⟨↓|`
    TwoProjectors { omega: f64, gamma1: f64, gamma2: f64 },
    /// `L = √σ |↓⟩⟨↑|`
    Relaxation { omega: f64, sigma: f64 },
}

impl BlochVariant {
    pub fn omega(&self) -> f64 {
        match *self {
            BlochVariant::DephasingZ { omega, .. }
            | BlochVariant::TwoProjectors { omega, .. }
            | BlochVariant::Relaxation { omega, .. } => omega,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlochVariant::DephasingZ { .. } => "dephasing_z",
            BlochVariant::TwoProjectors { .. } => "two_projectors",
            BlochVariant::Relaxation { .. } => "relaxation",
        }
    }

    /// Hamiltonian and jump operators of the underlying Lindblad equation.
    pub fn lindblad(&self) -> (HermitianOperator, Vec<CMatrix>) {
        let h = HermitianOperator::new_unchecked(Axis::Y.matrix() * re(self.omega()));
        let up = ndarray::arr2(&[[ONE, ZERO], [ZERO, ZERO]]);
        let down = ndarray::arr2(&[[ZERO, ZERO], [ZERO, ONE]]);
        let lower = ndarray::arr2(&[[ZERO, ZERO], [ONE, ZERO]]);
        let jumps = match *self {
            BlochVariant::DephasingZ { gamma, .. } => vec![Axis::Z.matrix() * re(gamma.sqrt())],
            BlochVariant::TwoProjectors { gamma1, gamma2, .. } => {
                vec![up * re(gamma1.sqrt()), down * re(gamma2.sqrt())]
            }
            BlochVariant::Relaxation { sigma, .. } => vec![lower * re(sigma.sqrt())],
        };
        (h, jumps)
    }
}

/// `d⟨σ⟩/dt = M⟨σ⟩ + b`; `b` is non-zero only for relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMatrix {
    pub variant: BlochVariant,
    pub matrix: Matrix3<f64>,
    pub affine: Vector3<f64>,
}

pub fn bloch_matrix(variant: BlochVariant) -> Result<BlochMatrix> {
    let o = variant.omega();
    if !o.is_finite() {
        return Err(Error::param("omega", "must be finite"));
    }
    let check = |name: &'static str, v: f64| {
        if !(v >= 0.0) || !v.is_finite() {
            Err(Error::param(name, format!("rate must be non-negative, got {v}")))
        } else {
            Ok(())
        }
    };
    let (d_xy, d_z, b_z) = match variant {
        BlochVariant::DephasingZ { gamma, .. } => {
            check("gamma", gamma)?;
            (-2.0 * gamma, 0.0, 0.0)
        }
        BlochVariant::TwoProjectors { gamma1, gamma2, .. } => {
            check("gamma1", gamma1)?;
            check("gamma2", gamma2)?;
            (-(gamma1 + gamma2) / 2.0, 0.0, 0.0)
        }
        BlochVariant::Relaxation { sigma, .. } => {
            check("sigma", sigma)?;
            (-sigma / 2.0, -sigma, -sigma)
        }
    };
    #[rustfmt::skip]
    let matrix = Matrix3::new(
        d_xy, 0.0, 2.0 * o,
        0.0, d_xy, 0.0,
        -2.0 * o, 0.0, d_z,
    );
    Ok(BlochMatrix {
        variant,
        matrix,
        affine: Vector3::new(0.0, 0.0, b_z),
    })
}

fn sort_desc(mut v: Vec<C64>) -> [C64; 3] {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    [v[0], v[1], v[2]]
}

/// Numerical eigenvalues, sorted by real part descending.
pub fn bloch_eigenvalues(m: &BlochMatrix) -> [C64; 3] {
    sort_desc(m.matrix.complex_eigenvalues().iter().copied().collect())
}

/// `(−b ± √(b² − 4c))/2` for `λ² + bλ + c`, with the small root computed
/// without cancellation.
fn quadratic_roots(b: f64, c: f64) -> (C64, C64) {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let big = -(b + s) / 2.0;
        let small = if big != 0.0 { c / big } else { 0.0 };
        (re(small), re(big))
    } else {
        let s = (-disc).sqrt();
        (C64::new(-b / 2.0, s / 2.0), C64::new(-b / 2.0, -s / 2.0))
    }
}

/// Closed-form eigenvalues `(λ₀, λ₊, λ₋)` of each variant.
pub fn closed_form_eigenvalues(variant: BlochVariant) -> (C64, C64, C64) {
    let o = variant.omega();
    let (l0, (lp, lm)) = match variant {
        // λ₀ = −2Γ, λ± = −Γ ± √(Γ² − 4Ω²)
        BlochVariant::DephasingZ { gamma, .. } => (-2.0 * gamma, quadratic_roots(2.0 * gamma, 4.0 * o * o)),
        // λ₀ = −(Γ₁+Γ₂)/2, λ± = (−Γ₁−Γ₂ ± √((Γ₁+Γ₂)² − 64Ω²))/4
        BlochVariant::TwoProjectors { gamma1, gamma2, .. } => {
            let s = gamma1 + gamma2;
            (-s / 2.0, quadratic_roots(s / 2.0, 4.0 * o * o))
        }
        // λ₀ = −σ/2, λ± = (−3σ ± √(σ² − 64Ω²))/4
        BlochVariant::Relaxation { sigma, .. } => (
            -sigma / 2.0,
            quadratic_roots(1.5 * sigma, sigma * sigma / 2.0 + 4.0 * o * o),
        ),
    };
    (re(l0), lp, lm)
}

impl BlochMatrix {
    /// Fixed point `−M⁻¹b` (the origin when `b = 0`).
    pub fn steady_state(&self) -> Option<Vector3<f64>> {
        if self.affine == Vector3::zeros() {
            return Some(Vector3::zeros());
        }
        self.matrix.try_inverse().map(|inv| -(inv * self.affine))
    }

    /// `⟨σ⟩(t)` from `⟨σ⟩(0)` via the matrix exponential.
    pub fn propagate(&self, r0: Vector3<f64>, t: f64) -> Vector3<f64> {
        let e = (self.matrix * t).exp();
        match self.steady_state() {
            Some(rs) => e * (r0 - rs) + rs,
            None => e * r0,
        }
    }

    pub fn max_real_part(&self) -> f64 {
        bloch_eigenvalues(self)
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn bloch_vector(rho: &CMatrix) -> Vector3<f64> {
    Vector3::new(
        2.0 * rho[[0, 1]].re,
        -2.0 * rho[[0, 1]].im,
        (rho[[0, 0]] - rho[[1, 1]]).re,
    )
}

pub fn density_from_bloch(r: Vector3<f64>) -> CMatrix {
    ndarray::arr2(&[
        [re(0.5 * (1.0 + r.z)), C64::new(0.5 * r.x, -0.5 * r.y)],
        [C64::new(0.5 * r.x, 0.5 * r.y), re(0.5 * (1.0 - r.z))],
    ])
}

/// Repeated projective measurement every `dt` for `n_meas` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenoSurvival {
    pub omega: f64,
    pub dt: f64,
    pub n_meas: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenoOutcome {
    pub survival: f64,
    pub transition: f64,
}

/// Survival `cos^{2N}(ΩΔt)` and transition `1 − cos^{2N}(ΩΔt)`.
pub fn zeno_survival(z: &ZenoSurvival) -> Result<ZenoOutcome> {
    if z.n_meas < 1 {
        return Err(Error::param("n_meas", "at least one measurement is required"));
    }
    if !(z.dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let x = z.omega * z.dt;
    let n = z.n_meas as f64;
    // ln cos x via ln(1 − sin²x) keeps the small-angle transition accurate.
    let log_survival = n * (-(x.sin().powi(2))).ln_1p();
    Ok(ZenoOutcome {
        survival: log_survival.exp(),
        transition: -log_survival.exp_m1(),
    })
}

/// `dS/dt = −Tr[(LρL − L²ρ) ln ρ]` for Hermitian `L`, evaluated in the
/// eigenbasis of ρ as `½ Σ_ab |L_ab|² (ρ_a − ρ_b)(ln ρ_a − ln ρ_b)`.
pub fn entropy_production(rho: &DensityMatrix, l: &HermitianOperator) -> Result<f64> {
    let dev = hermiticity_deviation(l.matrix());
    if dev > TOL.hermitian {
        return Err(Error::NotHermitian { deviation: dev });
    }
    crate::quantum::same_dim(rho.dim(), l.dim())?;
    let e = hermitian_eigensystem(&HermitianOperator::hermitized(rho.matrix().clone())?)?;
    let p: Vec<f64> = e.values.iter().map(|&v| v.max(TOL.entropy_floor)).collect();
    let n = p.len();
    let lv = l.matrix().dot(&e.vectors);
    let mut acc = 0.0;
    for a in 0..n {
        let va = e.vector(a);
        for b in (a + 1)..n {
            let lab = inner(&va, &lv.column(b).to_owned());
            acc += lab.norm_sqr() * (p[a] - p[b]) * (p[a].ln() - p[b].ln());
        }
    }
    Ok(acc)
}

/// Classical rate matrix over the eigenbasis of the measured observable.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    /// `W[ℓ][n]` is the rate `n → ℓ`; columns sum to zero.
    pub rates: Array2<f64>,
    pub observable_eigenvalues: Vec<f64>,
}

impl RateMatrix {
    /// Non-zero relaxation rates (negated eigenvalues of `W`), ascending.
    pub fn relaxation_rates(&self) -> Vec<f64> {
        let n = self.rates.nrows();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| self.rates[[i, j]]);
        let mut v: Vec<f64> = m.complex_eigenvalues().iter().map(|z| -z.re).collect();
        v.sort_by(f64::total_cmp);
        let scale = v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        v.into_iter().filter(|x| *x > 1e-12 * scale.max(1e-300)).collect()
    }

    pub fn stationary(&self) -> Vec<f64> {
        let n = self.rates.nrows();
        vec![1.0 / n as f64; n]
    }
}

/// Adiabatic elimination of coherences for `L = √Γ O`:
/// `W_ℓn = 4|⟨ℓ|H|n⟩|² / (Γ (λ_ℓ − λ_n)²)`.
pub fn strong_dissipation_rates(
    h: &HermitianOperator,
    o: &HermitianOperator,
    gamma: f64,
) -> Result<RateMatrix> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", "must be positive"));
    }
    crate::quantum::same_dim(h.dim(), o.dim())?;
    let e = hermitian_eigensystem(o)?;
    let lam = &e.values;
    let n = lam.len();
    let range = lam[n - 1] - lam[0];
    let min_gap = lam.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let threshold = TOL.degeneracy * range.max(f64::MIN_POSITIVE);
    if n > 1 && !(min_gap >= threshold && range > 0.0) {
        return Err(Error::DegenerateSpectrum {
            gap: min_gap,
            threshold,
        });
    }
    let hv = h.matrix().dot(&e.vectors);
    let mut w = Array2::zeros((n, n));
    for l in 0..n {
        let vl = e.vector(l);
        for m in 0..n {
            if l != m {
                let hlm = inner(&vl, &hv.column(m).to_owned());
                let d = lam[l] - lam[m];
                w[[l, m]] = 4.0 * hlm.norm_sqr() / (gamma * d * d);
            }
        }
    }
    for m in 0..n {
        let out: f64 = (0..n).filter(|&l| l != m).map(|l| w[[l, m]]).sum();
        w[[m, m]] = -out;
    }
    Ok(RateMatrix {
        rates: w,
        observable_eigenvalues: lam.clone(),
    })
}

/// Real parts of the analytic slowest dephasing-z eigenvalue `λ₊`.
pub fn dephasing_slow_rate(omega: f64, gamma: f64) -> C64 {
    closed_form_eigenvalues(BlochVariant::DephasingZ { omega, gamma }).1
}

/// Eigenvalues of a 2×2 Hermitian matrix (convenience for callers).
pub fn two_level_energies(h: &HermitianOperator) -> (f64, f64) {
    let v = eigenvalues_hermitian(h.matrix());
    (v[0], v[1])
}
