//! Explicit Runge–Kutta integrators over ndarray-valued states.

use ndarray::{Array, Dimension, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::C64;

/// Vector-space operations needed by the integrators.
pub trait OdeState: Clone {
    /// `self += a·x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// RMS of `err / (atol + rtol·max(|y0|, |y1|))`.
    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64;
    /// RMS magnitude, used for the initial step guess.
    fn rms(&self) -> f64;
}

macro_rules! impl_ode_state {
    ($t:ty, $abs:expr) => {
        impl<D: Dimension> OdeState for Array<$t, D> {
            fn axpy(&mut self, a: f64, x: &Self) {
                Zip::from(self).and(x).for_each(|s, &v| *s += v * a);
            }

            fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
                let mut acc = 0.0;
                Zip::from(err).and(y0).and(y1).for_each(|&e, &a, &b| {
                    let abs = $abs;
                    let sc = atol + rtol * abs(a).max(abs(b));
                    let r = abs(e) / sc;
                    acc += r * r;
                });
                (acc / err.len().max(1) as f64).sqrt()
            }

            fn rms(&self) -> f64 {
                let abs = $abs;
                let s: f64 = self.iter().map(|&v| abs(v) * abs(v)).sum();
                (s / self.len().max(1) as f64).sqrt()
            }
        }
    };
}

impl_ode_state!(f64, |v: f64| v.abs());
impl_ode_state!(C64, |v: C64| v.norm());

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// First trial step; estimated when absent.
    pub h_init: Option<f64>,
    pub h_max: f64,
    /// Smallest step relative to the integration span.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-7,
            h_init: None,
            h_max: f64::INFINITY,
            h_min_rel: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        Self {
            atol,
            rtol,
            ..Self::default()
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atol > 0.0 && self.rtol >= 0.0) {
            return Err(Error::param("atol/rtol", "tolerances must be positive"));
        }
        if !(self.h_max > 0.0) {
            return Err(Error::param("h_max", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<S: OdeState>(y: &S, h: f64, terms: &[(f64, &S)]) -> S {
    let mut out = y.clone();
    for &(a, k) in terms {
        if a != 0.0 {
            out.axpy(h * a, k);
        }
    }
    out
}

/// Adaptive Dormand–Prince 5(4) integration from `t0` through every time in
/// `stops` (ascending, all `> t0`).
///
/// `observer(t, y, stop)` runs after every accepted step and may modify the
/// state in place (projection, renormalization); `stop` is `Some(k)` when the
/// step landed on `stops[k]`.
pub fn dopri5<S, F, O>(
    mut rhs: F,
    t0: f64,
    y0: S,
    stops: &[f64],
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(S, OdeStats)>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
    O: FnMut(f64, &mut S, Option<usize>) -> Result<()>,
{
    opts.validate()?;
    let mut stats = OdeStats::default();
    let Some(&t_end) = stops.last() else {
        return Ok((y0, stats));
    };
    let span = t_end - t0;
    if !(span > 0.0) {
        return Err(Error::param("stops", "must lie after the initial time"));
    }
    let h_min = opts.h_min_rel * span.max(1.0);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    stats.evaluations += 1;

    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            let d0 = y.rms();
            let d1 = k1.rms();
            let h0 = if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            };
            (h0 * opts.rtol.max(1e-12).powf(0.2) / 1e-7f64.powf(0.2)).min(span)
        }
    }
    .min(opts.h_max)
    .max(h_min);

    let mut next = 0;
    while next < stops.len() && stops[next] <= t0 {
        next += 1;
    }
    let mut fac_max: f64 = 5.0;

    while next < stops.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        let target = stops[next];
        let mut landing = false;
        let mut step = h.min(opts.h_max);
        if t + step >= target - 1e-12 * step.max(1e-300) || t + step * 1.01 >= target {
            step = target - t;
            landing = true;
        }

        let k2 = rhs(t + C2 * step, &combo(&y, step, &[(A21, &k1)]))?;
        let k3 = rhs(t + C3 * step, &combo(&y, step, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs(
            t + C4 * step,
            &combo(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = rhs(
            t + C5 * step,
            &combo(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            t + step,
            &combo(
                &y,
                step,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y_new = combo(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let t_new = if landing { target } else { t + step };
        let k7 = rhs(t_new, &y_new)?;
        stats.evaluations += 6;

        let mut err = k1.clone();
        err.axpy(-1.0, &k1);
        err.axpy(step * E1, &k1);
        for (e, k) in [(E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)] {
            err.axpy(step * e, k);
        }
        let en = S::error_norm(&err, &y, &y_new, opts.atol, opts.rtol);
        if !en.is_finite() {
            h = step * 0.1;
            stats.rejected += 1;
            if h < h_min {
                return Err(Error::StepSizeUnderflow {
                    t,
                    h,
                    f: None,
                    gap: None,
                });
            }
            continue;
        }

        if en <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            y = y_new;
            let stop = if landing {
                next += 1;
                Some(next - 1)
            } else {
                None
            };
            let before = y.clone();
            observer(t, &mut y, stop)?;
            let mut diff = y.clone();
            diff.axpy(-1.0, &before);
            k1 = if diff.rms() == 0.0 {
                k7
            } else {
                stats.evaluations += 1;
                rhs(t, &y)?
            };
            let fac = if en == 0.0 {
                fac_max
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, fac_max)
            };
            // Keep the unclamped proposal when the step was shortened to land.
            if !landing || step >= h {
                h = step * fac;
            }
            fac_max = 5.0;
        } else {
            stats.rejected += 1;
            h = step * (0.9 * en.powf(-0.2)).max(0.1);
            fac_max = 1.0;
            if h < h_min {
                return Err(Error::StepSizeUnderflow {
                    t,
                    h,
                    f: None,
                    gap: None,
                });
            }
        }
    }
    Ok((y, stats))
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<S, F>(mut rhs: F, t: f64, y: &S, h: f64) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
{
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + 0.5 * h, &combo(y, h, &[(0.5, &k1)]))?;
    let k3 = rhs(t + 0.5 * h, &combo(y, h, &[(0.5, &k2)]))?;
    let k4 = rhs(t + h, &combo(y, h, &[(1.0, &k3)]))?;
    Ok(combo(
        y,
        h,
        &[
            (1.0 / 6.0, &k1),
            (1.0 / 3.0, &k2),
            (1.0 / 3.0, &k3),
            (1.0 / 6.0, &k4),
        ],
    ))
}

/// Evenly spaced output times `t0 + k·(t1−t0)/count`, `k = 1..=count`.
pub fn uniform_stops(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    let mut v: Vec<f64> = (1..=count)
        .map(|k| t0 + (t1 - t0) * k as f64 / count as f64)
        .collect();
    *v.last_mut().unwrap() = t1;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, Array1};

    #[test]
    fn harmonic_oscillator_accuracy() {
        let y0 = arr1(&[1.0, 0.0]);
        let stops = uniform_stops(0.0, 20.0, 10);
        let mut seen = Vec::new();
        let (y, stats) = dopri5(
            |_, y: &Array1<f64>| Ok(arr1(&[y[1], -y[0]])),
            0.0,
            y0,
            &stops,
            &OdeOptions::with_tolerances(1e-12, 1e-10),
            |t, _, stop| {
                if let Some(k) = stop {
                    seen.push((k, t));
                }
                Ok(())
            },
        )
        .unwrap();
        assert!((y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((y[1] + 20f64.sin()).abs() < 1e-8);
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[9].1, 20.0);
        assert!(stats.rejected < stats.accepted);
    }

    #[test]
    fn complex_decay() {
        let y0 = ndarray::Array1::from_elem(3, C64::new(1.0, 0.0));
        let lam = C64::new(-0.5, 2.0);
        let (y, _) = dopri5(
            |_, y: &Array1<C64>| Ok(y.mapv(|v| v * lam)),
            0.0,
            y0,
            &[3.0],
            &OdeOptions::default(),
            |_, _, _| Ok(()),
        )
        .unwrap();
        let exact = (lam * 3.0).exp();
        assert!((y[0] - exact).norm() < 1e-6);
    }

    #[test]
    fn rk4_order() {
        let f = |_: f64, y: &Array1<f64>| Ok(y.mapv(|v| -v));
        let run = |n: usize| {
            let mut y = arr1(&[1.0]);
            let h = 1.0 / n as f64;
            for k in 0..n {
                y = rk4_step(f, k as f64 * h, &y, h).unwrap();
            }
            (y[0] - (-1f64).exp()).abs()
        };
        let ratio = run(10) / run(20);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }
}
