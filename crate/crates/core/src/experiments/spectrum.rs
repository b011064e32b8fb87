use serde::Serialize;

use super::{ExperimentConfig, RunDirectory};
use crate::error::{Error, Result};
use crate::grover::{dense_low_energies, gap, GroverProblem, Schedule};

/// One spectrum sample. The `N − 2` remaining levels sit at `E_rest = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumRow {
    pub t: f64,
    pub f: f64,
    pub e0: f64,
    pub e1: f64,
    pub e_rest: f64,
}

impl SpectrumRow {
    const HEADER: [&'static str; 8] = [
        "t",
        "f",
        "E0",
        "E1",
        "E_rest",
        "E1_shifted",
        "E_rest_shifted",
        "gap",
    ];

    fn at(p: &GroverProblem, t: f64, f: f64) -> Self {
        let (e0, e1) = p.subspace_energies(f);
        SpectrumRow {
            t,
            f,
            e0,
            e1,
            e_rest: 0.0,
        }
    }

    fn csv(&self) -> Vec<f64> {
        vec![
            self.t,
            self.f,
            self.e0,
            self.e1,
            self.e_rest,
            self.e1 - self.e0,
            self.e_rest - self.e0,
            self.e1 - self.e0,
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub dim: usize,
    pub total_time: f64,
    pub min_gap: f64,
    pub min_gap_f: f64,
    /// `ΔE(½) = Ω/√N`
    pub gap_at_half: f64,
    pub min_gap_closed_form: f64,
    /// Dense-eigensolve gap at `f = ½` (qubit registers with `n ≤ 10`).
    pub min_gap_dense: Option<f64>,
    /// Share of the run-time spent where `ΔE < 2ΔE_min`.
    pub near_gap_fraction_constant: f64,
    pub near_gap_fraction_adaptive: f64,
    #[serde(skip)]
    pub by_f: Vec<SpectrumRow>,
    #[serde(skip)]
    pub by_t: Vec<SpectrumRow>,
}

/// Interval of `f` where `ΔE(f) < 2Ω/√N`:
/// `(1 + 1/N) f² − f + ¼ − 1/N < 0`.
fn near_gap_interval(p: &GroverProblem) -> (f64, f64) {
    let nf = p.size();
    let a = 1.0 + 1.0 / nf;
    let disc = (1.0 - 4.0 * a * (0.25 - 1.0 / nf)).max(0.0).sqrt();
    ((1.0 - disc) / (2.0 * a), (1.0 + disc) / (2.0 * a))
}

pub fn run_spectrum(config: &ExperimentConfig) -> Result<SpectrumReport> {
    if config.dim.is_none() && config.n > 10 {
        return Err(Error::param(
            "n",
            "full spectra need n ≤ 10; set `dim` for the reduced two-level plus zero-sector model",
        ));
    }
    let p = config.problem()?;
    let schedule: Schedule = config.build_schedule(&p)?;
    let m = config.f_points;
    let by_f: Vec<SpectrumRow> = (0..m)
        .map(|k| {
            let f = k as f64 / (m - 1) as f64;
            let t = schedule.time_at(f).unwrap_or(f64::NAN);
            SpectrumRow::at(&p, t, f)
        })
        .collect();
    let total = schedule.total_time;
    let by_t = (0..m)
        .map(|k| {
            let t = total * k as f64 / (m - 1) as f64;
            Ok(SpectrumRow::at(&p, t, schedule.f(t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    // the gap minimum of ΔE² = Ω²((1−2f)² + 4f²/N) is at f = N/(2(N+1))
    let min_gap_f = p.size() / (2.0 * (p.size() + 1.0));
    let min_gap = gap(&p, min_gap_f)?;
    let min_gap_dense = match p.qubits() {
        Some(n) if n <= 10 => {
            let (e0, e1) = dense_low_energies(&p, 0.5)?;
            Some(e1 - e0)
        }
        _ => None,
    };
    let (lo, hi) = near_gap_interval(&p);
    let adaptive_fraction = (schedule.time_at(lo)? - schedule.time_at(hi)?) / total;
    Ok(SpectrumReport {
        dim: p.dim,
        total_time: total,
        min_gap,
        min_gap_f,
        gap_at_half: gap(&p, 0.5)?,
        min_gap_closed_form: p.min_gap(),
        min_gap_dense,
        near_gap_fraction_constant: hi - lo,
        near_gap_fraction_adaptive: adaptive_fraction,
        by_f,
        by_t,
    })
}

pub(super) fn write(config: &ExperimentConfig, dir: &RunDirectory) -> Result<serde_json::Value> {
    let r = run_spectrum(config)?;
    let rows = |v: &[SpectrumRow]| v.iter().map(SpectrumRow::csv).collect::<Vec<_>>();
    dir.write_csv("spectrum_f.csv", &SpectrumRow::HEADER, &rows(&r.by_f))?;
    dir.write_csv("spectrum_t.csv", &SpectrumRow::HEADER, &rows(&r.by_t))?;
    let summary = serde_json::to_value(&r)?;
    dir.write_json("report.json", &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn thousand_item_database() {
        let mut c = ExperimentConfig::minimal(ExperimentKind::Spectrum);
        c.dim = Some(1000);
        let r = run_spectrum(&c).unwrap();
        // minimum of the closed form sits at f = N/(2(N+1)), within 1/N of ½
        assert!((r.min_gap - 1.0 / 1000f64.sqrt()).abs() < 1e-3 * r.min_gap);
        assert!((r.gap_at_half - 1.0 / 1000f64.sqrt()).abs() < 1e-12);
        let first = r.by_f.first().unwrap();
        let last = r.by_f.last().unwrap();
        assert!((first.e1 - first.e0 - 1.0).abs() < 1e-12);
        assert!((last.e1 - last.e0 - 1.0).abs() < 1e-12);
        assert!(r.min_gap_dense.is_none());
    }

    #[test]
    fn adaptive_lingers_near_the_gap() {
        let mut fr = Vec::new();
        for n in [6, 8, 10] {
            let mut c = ExperimentConfig::minimal(ExperimentKind::Spectrum);
            c.n = n;
            let r = run_spectrum(&c).unwrap();
            assert!((r.min_gap_dense.unwrap() - r.min_gap_closed_form).abs() < 5.0 / (1u64 << n) as f64);
            fr.push((r.near_gap_fraction_constant, r.near_gap_fraction_adaptive));
        }
        // constant: fraction ∝ 1/√N; adaptive: O(1)
        assert!((fr[0].0 / fr[2].0 - 4.0).abs() < 0.2, "{fr:?}");
        assert!(fr.iter().all(|x| x.1 > 0.3), "{fr:?}");
    }
}
