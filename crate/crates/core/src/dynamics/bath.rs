use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum CorrelationKind {
    /// `Γ₀/(2τ_env)·e^{−|τ|/τ_env}·e^{−iω_env τ}`
    Exponential,
    /// `Γ₀ δ(τ)`, the `τ_env → 0` limit of the exponential kind.
    Delta,
    /// `Γ₀/(2τ_env)·(1 + |τ|/τ_env)^{−p}·e^{−iω_env τ}`; integrable only for `p > 1`.
    PowerLaw { exponent: f64 },
}

/// How correlations between different qubits' bath operators are arranged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spatial {
    /// One common bath: `C_{μν} = C` for all pairs.
    LongRange,
    /// Independent baths: `C_{μν} = δ_{μν} C`.
    ShortRange,
}

impl Spatial {
    pub fn weight(self, mu: usize, nu: usize) -> f64 {
        match self {
            Spatial::LongRange => 1.0,
            Spatial::ShortRange => {
                if mu == nu {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `Σ_{μν} w_{μν}` over `n` qubits.
    pub fn pair_count(self, n: usize) -> f64 {
        match self {
            Spatial::LongRange => (n * n) as f64,
            Spatial::ShortRange => n as f64,
        }
    }
}

/// Stationary bath two-point function with its coupling constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathModel {
    pub g: f64,
    pub tau_env: f64,
    pub gamma0: f64,
    #[serde(default)]
    pub omega_env: f64,
    #[serde(default = "default_kind")]
    pub kind: CorrelationKind,
    #[serde(default = "default_spatial")]
    pub spatial: Spatial,
}

fn default_kind() -> CorrelationKind {
    CorrelationKind::Exponential
}

fn default_spatial() -> Spatial {
    Spatial::LongRange
}

impl BathModel {
    pub fn exponential(g: f64, tau_env: f64, gamma0: f64, omega_env: f64) -> Result<Self> {
        Self {
            g,
            tau_env,
            gamma0,
            omega_env,
            kind: CorrelationKind::Exponential,
            spatial: Spatial::LongRange,
        }
        .validated()
    }

    pub fn delta(g: f64, gamma0: f64) -> Result<Self> {
        Self {
            g,
            tau_env: f64::MIN_POSITIVE,
            gamma0,
            omega_env: 0.0,
            kind: CorrelationKind::Delta,
            spatial: Spatial::LongRange,
        }
        .validated()
    }

    pub fn with_spatial(mut self, spatial: Spatial) -> Self {
        self.spatial = spatial;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.tau_env > 0.0) || !self.tau_env.is_finite() {
            return Err(Error::param("bath.tau_env", "must be positive"));
        }
        if !(self.gamma0 >= 0.0) || !self.gamma0.is_finite() {
            return Err(Error::param("bath.gamma0", "must be non-negative"));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::param("bath.g", "must be non-negative"));
        }
        if !self.omega_env.is_finite() {
            return Err(Error::param("bath.omega_env", "must be finite"));
        }
        if let CorrelationKind::PowerLaw { exponent } = self.kind {
            if !(exponent > 0.0) {
                return Err(Error::param("bath.kind.exponent", "must be positive"));
            }
        }
        Ok(self)
    }

    fn amplitude(&self) -> f64 {
        self.gamma0 / (2.0 * self.tau_env)
    }

    /// `C(τ)`. The delta kind has no pointwise values and returns zero.
    pub fn correlation(&self, tau: f64) -> C64 {
        let phase = C64::from_polar(1.0, -self.omega_env * tau);
        match self.kind {
            CorrelationKind::Exponential => phase * (self.amplitude() * (-tau.abs() / self.tau_env).exp()),
            CorrelationKind::PowerLaw { exponent } => {
                phase * (self.amplitude() * (1.0 + tau.abs() / self.tau_env).powf(-exponent))
            }
            CorrelationKind::Delta => C64::new(0.0, 0.0),
        }
    }

    /// `(A, z)` with `C(τ) = A e^{−zτ}` for `τ ≥ 0` (exponential kind only).
    pub fn exponential_parts(&self) -> Option<(f64, C64)> {
        match self.kind {
            CorrelationKind::Exponential => {
                Some((self.amplitude(), C64::new(1.0 / self.tau_env, self.omega_env)))
            }
            _ => None,
        }
    }

    /// `∫₀^∞ C(τ) dτ`
    pub fn half_integral(&self) -> Result<C64> {
        match self.kind {
            CorrelationKind::Exponential => {
                Ok(C64::new(self.gamma0, 0.0) / (C64::new(2.0, 2.0 * self.omega_env * self.tau_env)))
            }
            CorrelationKind::Delta => Ok(C64::new(0.5 * self.gamma0, 0.0)),
            CorrelationKind::PowerLaw { exponent } => {
                if exponent <= 1.0 {
                    return Err(Error::NonIntegrableCorrelation(format!(
                        "power-law exponent {exponent} ≤ 1: the memory integral diverges"
                    )));
                }
                if self.omega_env == 0.0 {
                    return Ok(C64::new(self.amplitude() * self.tau_env / (exponent - 1.0), 0.0));
                }
                Ok(self.numeric_half_integral(exponent))
            }
        }
    }

    fn numeric_half_integral(&self, exponent: f64) -> C64 {
        // Integrate up to where the envelope has fallen below 1e-12; the
        // oscillation sets the step.
        let tau = self.tau_env;
        let cutoff = tau * (1e-12f64.powf(-1.0 / exponent) - 1.0);
        let period = 2.0 * std::f64::consts::PI / self.omega_env.abs();
        let h = (tau.min(period) / 64.0).max(cutoff / 4e6);
        let m = ((cutoff / h).ceil() as usize).max(2) & !1;
        let h = cutoff / m as f64;
        let mut acc = self.correlation(0.0) + self.correlation(cutoff);
        for k in 1..m {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += self.correlation(k as f64 * h) * w;
        }
        acc * (h / 3.0)
    }

    /// Spectrum `S(ω) = ∫ C(τ) e^{iωτ} dτ` (non-negative by Bochner).
    pub fn spectrum(&self, omega: f64) -> f64 {
        match self.kind {
            CorrelationKind::Exponential => {
                let a = 1.0 / self.tau_env;
                let d = omega - self.omega_env;
                self.amplitude() * 2.0 * a / (a * a + d * d)
            }
            CorrelationKind::Delta => self.gamma0,
            CorrelationKind::PowerLaw { .. } => {
                let shifted = BathModel {
                    omega_env: self.omega_env - omega,
                    ..*self
                };
                2.0 * shifted.half_integral().map(|z| z.re).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Bochner check on a sampled grid: the discrete Fourier transform of
    /// `C` on `[−L, L]` must be non-negative at every sampled frequency.
    /// Returns the smallest transform value relative to the largest one.
    pub fn bochner_check(&self, samples: usize) -> Result<f64> {
        if matches!(self.kind, CorrelationKind::Delta) {
            return Ok(0.0);
        }
        let samples = samples.max(16);
        let span = match self.kind {
            CorrelationKind::PowerLaw { exponent } => {
                self.tau_env * (1e-6f64.powf(-1.0 / exponent) - 1.0).min(1e6)
            }
            _ => 30.0 * self.tau_env,
        };
        let h = span / samples as f64;
        let c: Vec<C64> = (0..=samples).map(|k| self.correlation(k as f64 * h)).collect();
        let nyquist = std::f64::consts::PI / h;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for j in 0..=samples {
            let w = -nyquist + 2.0 * nyquist * j as f64 / samples as f64;
            // 2 Re ∫₀^L C(τ) e^{iωτ} dτ by the trapezoid rule (C(−τ) = C(τ)*).
            let mut acc = 0.5 * (c[0] + c[samples] * C64::from_polar(1.0, w * span));
            for (k, ck) in c.iter().enumerate().take(samples).skip(1) {
                acc += ck * C64::from_polar(1.0, w * k as f64 * h);
            }
            let v = 2.0 * (acc * h).re;
            lo = lo.min(v);
            hi = hi.max(v.abs());
        }
        let rel = if hi > 0.0 { lo / hi } else { 0.0 };
        if rel < -1e-6 {
            return Err(Error::NotPositiveSemidefinite { min_eig: lo });
        }
        Ok(rel)
    }
}
