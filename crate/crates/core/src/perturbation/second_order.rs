//! Second-order error probability
//!
//! `P = 2g²Ω² Re ∫dt₁ Σ_i (Q a_i(t₁) − c_i(t₁))† Y_i(t₁)` with
//! `a_i = σ_i(t)ψ`, `c_i = σ_i(t)Qψ`, `Y_i(t₁) = ∫_{t_in}^{t₁} dt₂ Σ_j C_ij(t₁−t₂) a_j(t₂)`,
//! all in the interaction picture of the window's initial time.

use serde::{Deserialize, Serialize};

use super::propagator::{AdiabaticFrame, DenseFrame, ExactFrame, Frame};
use super::{first_order_shift, Channel, InteractionSpec};
use crate::error::{Error, Result};
use crate::grover::{grover_hamiltonian, GroverProblem, Schedule};
use crate::quantum::{apply_pauli, hermitian_eigensystem, inner, CVector, HermitianOperator, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Trapezoid in `t₋` truncated at `t_minus_extent·τ_env`.
    Grid,
    /// Recursive convolution for exponential-sum correlations; no truncation.
    ExponentialSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorKind {
    Adiabatic,
    TimeOrdered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorTarget {
    /// Population of `ψ₁(t_out)`.
    FirstExcited,
    /// Everything outside `ψ₀(t_out)`.
    AllExcited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecondOrderOptions {
    pub method: Quadrature,
    pub propagator: PropagatorKind,
    pub target: ErrorTarget,
    pub t_minus_points: usize,
    /// In units of `τ_env`.
    pub t_minus_extent: f64,
    /// Upper bound on the time step (default `0.02/Ω`).
    pub step: Option<f64>,
    /// Combine steps `h` and `h/2` to cancel the `O(h²)` quadrature error.
    pub richardson: bool,
}

impl Default for SecondOrderOptions {
    fn default() -> Self {
        SecondOrderOptions {
            method: Quadrature::Grid,
            propagator: PropagatorKind::Adiabatic,
            target: ErrorTarget::AllExcited,
            t_minus_points: 64,
            t_minus_extent: 8.0,
            step: None,
            richardson: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondOrderReport {
    pub p_error: f64,
    /// Estimate at the base step alone (equals `p_error` without Richardson).
    pub p_coarse: f64,
    pub g: f64,
    pub window: (f64, f64),
    pub step: f64,
    pub steps: usize,
    pub tau_env: f64,
    /// Whether a first-order shift was folded into the system Hamiltonian.
    pub renormalized: bool,
}

pub fn second_order_error(
    spec: &InteractionSpec,
    p: &GroverProblem,
    schedule: &Schedule,
    window: (f64, f64),
    opts: &SecondOrderOptions,
) -> Result<SecondOrderReport> {
    let n = p
        .qubits()
        .ok_or_else(|| Error::param("problem", "couplings need a qubit register"))?;
    spec.validate(Some(n))?;
    let (t_in, t_out) = window;
    let end = schedule.total_time;
    if !(t_in >= 0.0 && t_in < t_out && t_out <= end * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange {
            t: if t_in < 0.0 || t_in >= t_out { t_in } else { t_out },
            start: 0.0,
            end,
        });
    }
    let t_out = t_out.min(end);
    let span = t_out - t_in;
    let tau_env = spec.tau_env();
    let renormalized = spec.has_means();
    if renormalized && opts.propagator == PropagatorKind::Adiabatic {
        return Err(Error::param(
            "propagator",
            "non-zero bath means shift the spectrum; use the time-ordered propagator",
        ));
    }
    let max_step = opts.step.unwrap_or(0.02 / p.omega);
    if !(max_step > 0.0) {
        return Err(Error::param("step", "must be positive"));
    }
    let step = match opts.method {
        Quadrature::Grid => {
            if !tau_env.is_finite() {
                return Err(Error::NonIntegrableCorrelation(
                    "non-decaying correlation terms need the exponential_sum quadrature".into(),
                ));
            }
            if span < tau_env {
                return Err(Error::param(
                    "window",
                    format!("window {span} is shorter than τ_env = {tau_env}"),
                ));
            }
            if opts.t_minus_points < 2 || !(opts.t_minus_extent > 0.0) {
                return Err(Error::param(
                    "t_minus",
                    "need at least two points over a positive extent",
                ));
            }
            let delta = opts.t_minus_extent * tau_env / opts.t_minus_points as f64;
            delta / (delta / max_step).ceil()
        }
        Quadrature::ExponentialSum => max_step,
    };
    let steps = ((span / step).ceil() as usize).max(2);
    let ctx = Context {
        spec,
        p: *p,
        n,
        schedule,
        t_in,
        span,
        opts,
        channels: spec.channels(),
        shift: if renormalized {
            Some(first_order_shift(spec, p)?.operator)
        } else {
            None
        },
    };
    if opts.method == Quadrature::ExponentialSum
        && ctx.channels.iter().any(|c| c.correlation.terms().is_none())
    {
        return Err(Error::param(
            "method",
            "exponential_sum needs exponential correlations",
        ));
    }
    let p_coarse = if spec.g == 0.0 { 0.0 } else { ctx.integrate(steps)? };
    let p_error = if opts.richardson && spec.g != 0.0 {
        let fine = ctx.integrate(2 * steps)?;
        (4.0 * fine - p_coarse) / 3.0
    } else {
        p_coarse
    };
    Ok(SecondOrderReport {
        p_error,
        p_coarse,
        g: spec.g,
        window: (t_in, t_out),
        step: span / steps as f64,
        steps,
        tau_env,
        renormalized,
    })
}

struct Context<'a> {
    spec: &'a InteractionSpec,
    p: GroverProblem,
    n: usize,
    schedule: &'a Schedule,
    t_in: f64,
    span: f64,
    opts: &'a SecondOrderOptions,
    channels: Vec<Channel>,
    shift: Option<HermitianOperator>,
}

impl Context<'_> {
    fn hamiltonian(&self, f: f64) -> Result<HermitianOperator> {
        let h = grover_hamiltonian(&self.p, f)?;
        match &self.shift {
            Some(s) => h.add(s),
            None => Ok(h),
        }
    }

    fn levels(&self, t: f64) -> Result<(CVector, CVector)> {
        let f = self.schedule.f(t)?;
        if self.shift.is_none() {
            return Ok(self.p.instantaneous_states(f));
        }
        let es = hermitian_eigensystem(&self.hamiltonian(f)?)?;
        Ok((es.vector(0), es.vector(1)))
    }

    fn frame(&self, h: f64) -> Result<Box<dyn Frame + '_>> {
        let t0 = self.t_in;
        Ok(match (&self.shift, self.opts.propagator) {
            (Some(_), _) => Box::new(DenseFrame::new(
                self.p.dim,
                self.schedule,
                Box::new(move |f| Ok(self.hamiltonian(f)?.into_matrix())),
                t0,
                h,
            )),
            (None, PropagatorKind::Adiabatic) => {
                Box::new(AdiabaticFrame::new(&self.p, self.schedule, t0, h)?)
            }
            (None, PropagatorKind::TimeOrdered) => Box::new(ExactFrame::new(&self.p, self.schedule, t0, h)?),
        })
    }

    fn integrate(&self, steps: usize) -> Result<f64> {
        let h = self.span / steps as f64;
        let t_out = self.t_in + self.span;
        let psi = self.levels(self.t_in)?.0;

        // interaction-picture projector target
        let mut frame = self.frame(h)?;
        frame.advance(t_out)?;
        let (g_out, e_out) = self.levels(t_out)?;
        let (chi, all) = match self.opts.target {
            ErrorTarget::AllExcited => (frame.backward(&g_out), true),
            ErrorTarget::FirstExcited => (frame.backward(&e_out), false),
        };
        let project = |x: &CVector| -> CVector {
            let c = inner(&chi, x);
            if all {
                let mut y = x.clone();
                y.scaled_add(-c, &chi);
                y
            } else {
                &chi * c
            }
        };
        let q_psi = project(&psi);

        let mut frame = self.frame(h)?;
        let k = self.spec.couplings.len();
        let mut acc = Accumulator::new(self, h, k)?;
        let mut integral = 0.0;
        for step in 0..=steps {
            let t = self.t_in + step as f64 * h;
            if step > 0 {
                frame.advance(t)?;
            }
            let psi_t = frame.forward(&psi);
            let qpsi_t = frame.forward(&q_psi);
            let mut a = Vec::with_capacity(k);
            let mut c = Vec::with_capacity(k);
            for cp in &self.spec.couplings {
                a.push(frame.backward(&apply_pauli(cp.axis, cp.qubit, self.n, &psi_t)?));
                c.push(frame.backward(&apply_pauli(cp.axis, cp.qubit, self.n, &qpsi_t)?));
            }
            let y = acc.push(&a);
            let mut value = 0.0;
            for i in 0..k {
                let mut lhs = project(&a[i]);
                lhs.scaled_add(C64::new(-1.0, 0.0), &c[i]);
                value += inner(&lhs, &y[i]).re;
            }
            let w = if step == 0 || step == steps { 0.5 * h } else { h };
            integral += w * value;
        }
        let g = self.spec.g * self.p.omega;
        Ok(2.0 * g * g * integral)
    }
}

/// History convolution `Y_i(t) = Σ_r ∫ c_r(t−t′) b^r_i(t′) dt′`,
/// `b^r_i = Σ_j W^r_ij a_j`.
enum Accumulator {
    Grid {
        h: f64,
        /// `c_r(l h)` for `l = 0..=lags`.
        kernel: Vec<Vec<C64>>,
        weights: Vec<ndarray::Array2<f64>>,
        /// Newest first; entry `[r][i]`.
        history: std::collections::VecDeque<Vec<Vec<CVector>>>,
        k: usize,
    },
    Exponential {
        weights: Vec<ndarray::Array2<f64>>,
        /// Per channel, per term: `(decay, w_old, w_new)`.
        coefficients: Vec<Vec<(C64, C64, C64)>>,
        state: Vec<Vec<Vec<CVector>>>,
        previous: Option<Vec<Vec<CVector>>>,
        k: usize,
    },
}

fn mix(w: &ndarray::Array2<f64>, a: &[CVector]) -> Vec<CVector> {
    let k = a.len();
    (0..k)
        .map(|i| {
            let mut b = CVector::zeros(a[0].len());
            for j in 0..k {
                if w[[i, j]] != 0.0 {
                    b.scaled_add(C64::new(w[[i, j]], 0.0), &a[j]);
                }
            }
            b
        })
        .collect()
}

/// Exact weights of `∫₀ʰ e^{−z(h−u)} b(u) du` for linear `b`:
/// returns `(w_old, w_new)`.
pub(crate) fn exp_linear_weights(z: C64, h: f64) -> (C64, C64) {
    let x = z * h;
    let (phi1, g) = if x.norm() < 1e-3 {
        (
            1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0,
            0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0,
        )
    } else {
        let e = (-x).exp();
        ((1.0 - e) / x, (1.0 - e * (1.0 + x)) / (x * x))
    };
    (g * h, (phi1 - g) * h)
}

impl Accumulator {
    fn new(ctx: &Context, h: f64, k: usize) -> Result<Self> {
        let weights: Vec<_> = ctx.channels.iter().map(|c| c.weights.clone()).collect();
        Ok(match ctx.opts.method {
            Quadrature::Grid => {
                let lags = (ctx.opts.t_minus_extent * ctx.spec.tau_env() / h).round() as usize;
                let kernel = ctx
                    .channels
                    .iter()
                    .map(|c| (0..=lags).map(|l| c.correlation.eval(l as f64 * h)).collect())
                    .collect();
                Accumulator::Grid {
                    h,
                    kernel,
                    weights,
                    history: Default::default(),
                    k,
                }
            }
            Quadrature::ExponentialSum => {
                let coefficients: Vec<Vec<_>> = ctx
                    .channels
                    .iter()
                    .map(|c| {
                        c.correlation
                            .terms()
                            .unwrap_or_default()
                            .iter()
                            .map(|t| {
                                let (w0, w1) = exp_linear_weights(t.rate, h);
                                ((-t.rate * h).exp(), t.amplitude * w0, t.amplitude * w1)
                            })
                            .collect()
                    })
                    .collect();
                let dim = ctx.p.dim;
                let state = coefficients
                    .iter()
                    .map(|terms| terms.iter().map(|_| vec![CVector::zeros(dim); k]).collect())
                    .collect();
                Accumulator::Exponential {
                    weights,
                    coefficients,
                    state,
                    previous: None,
                    k,
                }
            }
        })
    }

    fn push(&mut self, a: &[CVector]) -> Vec<CVector> {
        let dim = a[0].len();
        match self {
            Accumulator::Grid {
                h,
                kernel,
                weights,
                history,
                k,
            } => {
                history.push_front(weights.iter().map(|w| mix(w, a)).collect());
                let lags = kernel[0].len() - 1;
                history.truncate(lags + 1);
                let last = history.len() - 1;
                let mut y = vec![CVector::zeros(dim); *k];
                if last == 0 {
                    return y;
                }
                for (l, b) in history.iter().enumerate() {
                    let w = if l == 0 || l == last { 0.5 * *h } else { *h };
                    for (r, br) in b.iter().enumerate() {
                        let c = kernel[r][l] * w;
                        for i in 0..*k {
                            y[i].scaled_add(c, &br[i]);
                        }
                    }
                }
                y
            }
            Accumulator::Exponential {
                weights,
                coefficients,
                state,
                previous,
                k,
            } => {
                let b: Vec<Vec<CVector>> = weights.iter().map(|w| mix(w, a)).collect();
                let mut y = vec![CVector::zeros(dim); *k];
                if let Some(prev) = previous.as_ref() {
                    for (r, terms) in coefficients.iter().enumerate() {
                        for (q, &(decay, w0, w1)) in terms.iter().enumerate() {
                            for i in 0..*k {
                                let s = &mut state[r][q][i];
                                *s *= decay;
                                s.scaled_add(w0, &prev[r][i]);
                                s.scaled_add(w1, &b[r][i]);
                            }
                        }
                    }
                }
                for terms in state.iter() {
                    for s in terms {
                        for i in 0..*k {
                            y[i] += &s[i];
                        }
                    }
                }
                *previous = Some(b);
                y
            }
        }
    }
}
