use serde::{Deserialize, Serialize};

use super::{gap_unchecked, GroverProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Constant,
    Adaptive,
}

/// Sampled interpolation curve `f(t)` from `f(0) = 1` to `f(T) = 0`.
///
/// Between samples the curve is a cubic Hermite interpolant whose slopes
/// start from the known `ḟ` and are limited with the Fritsch–Carlson
/// condition, so the interpolant stays monotone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub total_time: f64,
    pub epsilon: Option<f64>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Schedule {
    fn from_samples(
        kind: ScheduleKind,
        epsilon: Option<f64>,
        times: Vec<f64>,
        values: Vec<f64>,
        mut slopes: Vec<f64>,
    ) -> Self {
        let n = times.len();
        for i in 0..n - 1 {
            let h = times[i + 1] - times[i];
            let delta = (values[i + 1] - values[i]) / h;
            if delta == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / delta;
            let b = slopes[i + 1] / delta;
            if a < 0.0 {
                slopes[i] = 0.0;
            }
            if b < 0.0 {
                slopes[i + 1] = 0.0;
            }
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * a * delta;
                slopes[i + 1] = tau * b * delta;
            }
        }
        Self {
            kind,
            total_time: times[n - 1],
            epsilon,
            times,
            values,
            slopes,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let end = self.total_time;
        if !(t >= -1e-12 * end.max(1.0) && t <= end * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { t, start: 0.0, end });
        }
        let k = self.times.partition_point(|&x| x <= t);
        Ok(k.clamp(1, self.times.len() - 1) - 1)
    }

    /// Interpolated `f(t)`, clamped to `[0, 1]`.
    pub fn f(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        Ok(self.hermite(i, t).0.clamp(0.0, 1.0))
    }

    /// Interpolated `df/dt`.
    pub fn fdot(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        Ok(self.hermite(i, t).1)
    }

    fn hermite(&self, i: usize, t: f64) -> (f64, f64) {
        let t0 = self.times[i];
        let h = self.times[i + 1] - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let dv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        (v, dv)
    }

    /// Inverse lookup `t(f)` by bisection on the monotone interpolant.
    pub fn time_at(&self, f: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::param("f", format!("{f} outside [0, 1]")));
        }
        let k = self.values.partition_point(|&v| v > f);
        if k == 0 {
            return Ok(0.0);
        }
        if k >= self.len() {
            return Ok(self.total_time);
        }
        let (mut lo, mut hi) = (self.times[k - 1], self.times[k]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(k - 1, mid).0 > f {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// A copy whose time axis is stretched by `factor` (`f(t) → f(t/factor)`).
    pub fn stretched(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for t in &mut s.times {
            *t *= factor;
        }
        for m in &mut s.slopes {
            *m /= factor;
        }
        s.total_time *= factor;
        s.epsilon = s.epsilon.map(|e| e / factor);
        s
    }
}

fn sample_count(p: &GroverProblem) -> usize {
    (20.0 * p.size().sqrt()).ceil().max(1001.0) as usize
}

/// `f(t) = 1 − t/T`.
pub fn schedule_constant(p: &GroverProblem, total_time: f64) -> Result<Schedule> {
    if !(total_time > 0.0) || !total_time.is_finite() {
        return Err(Error::param(
            "T",
            format!("run-time must be positive, got {total_time}"),
        ));
    }
    let m = sample_count(p);
    let times: Vec<f64> = (0..m).map(|i| total_time * i as f64 / (m - 1) as f64).collect();
    let mut values: Vec<f64> = (0..m).map(|i| 1.0 - i as f64 / (m - 1) as f64).collect();
    values[m - 1] = 0.0;
    let slopes = vec![-1.0 / total_time; m];
    Ok(Schedule::from_samples(
        ScheduleKind::Constant,
        None,
        times,
        values,
        slopes,
    ))
}

/// Gap-adaptive schedule `ḟ = −(ε/Ω)ΔE²(f)`.
///
/// `t(f) = (Ω/ε)∫_f^1 df′/ΔE²` is evaluated by Simpson's rule on every
/// interval of an f-grid that is uniform with at least `20√N` points and is
/// refined again inside `|f − ½| ≤ 5/√N`.
pub fn schedule_adaptive(p: &GroverProblem, epsilon: f64) -> Result<Schedule> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::param(
            "epsilon",
            format!("must be positive and finite, got {epsilon}"),
        ));
    }
    if epsilon > 1.0 {
        return Err(Error::UnderResolved(format!(
            "epsilon = {epsilon} > 1 crosses the gap minimum faster than the \
             local level spacing and the sampled schedule no longer resolves it"
        )));
    }
    let m = sample_count(p);
    let width = 5.0 / p.size().sqrt();
    let mut grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    if width < 0.5 {
        let lo = 0.5 - width;
        grid.extend((0..m).map(|i| lo + 2.0 * width * i as f64 / (m - 1) as f64));
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let inv = |f: f64| {
        let g = gap_unchecked(p, f);
        1.0 / (g * g)
    };
    let scale = p.omega / epsilon;
    // The dip of 1/ΔE² has half-width ~1/√N; require a few samples across it.
    let max_step = grid.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let near = grid
        .windows(2)
        .filter(|w| (0.5 * (w[0] + w[1]) - 0.5).abs() < 1.0 / p.size().sqrt())
        .count();
    if near < 20 {
        return Err(Error::UnderResolved(format!(
            "only {near} samples inside the gap region (grid step {max_step:.3e})"
        )));
    }

    let mut times = Vec::with_capacity(grid.len());
    let mut t = 0.0;
    times.push(0.0);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let integral = (a - b) / 6.0 * (inv(a) + 4.0 * inv(0.5 * (a + b)) + inv(b));
        t += scale * integral;
        times.push(t);
    }
    let slopes: Vec<f64> = grid
        .iter()
        .map(|&f| {
            let g = gap_unchecked(p, f);
            -(epsilon / p.omega) * g * g
        })
        .collect();
    let mut values = grid;
    *values.last_mut().unwrap() = 0.0;
    Ok(Schedule::from_samples(
        ScheduleKind::Adaptive,
        Some(epsilon),
        times,
        values,
        slopes,
    ))
}

/// `∫₀¹ df/((1−2f)² + 4f²/N)` in closed form.
pub fn adaptive_integral(n: f64) -> f64 {
    0.5 * n.sqrt() * (((1.0 + 2.0 / n) * n.sqrt()).atan() + n.sqrt().atan())
}
