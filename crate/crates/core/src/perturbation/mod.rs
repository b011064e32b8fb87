//! System-environment perturbation theory for `H_int = gΩ Σ σ_μ^a B_μ^a`,
//! plus an exact system ⊗ bath-qubit oracle.

mod joint;
mod propagator;
mod second_order;

pub use joint::{
    joint_exact_evolve, BathLink, JointBathSpec, JointOptions, JointOutcome, MAX_BATH_QUBITS,
    MAX_JOINT_QUBITS,
};
pub use propagator::{
    adiabatic_propagator, time_ordered_propagator, AdiabaticPropagator, TimeOrderedPropagator,
};
pub use second_order::{
    second_order_error, ErrorTarget, PropagatorKind, Quadrature, SecondOrderOptions, SecondOrderReport,
};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dynamics::{BathModel, CorrelationKind};
use crate::error::{Error, Result};
use crate::grover::GroverProblem;
use crate::quantum::{inner, pauli_operator, Axis, CMatrix, HermitianOperator, C64};

/// One system coupling `σ_μ^a` with its bath partner's mean `⟨B_μ^a⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub qubit: usize,
    pub axis: Axis,
    #[serde(default)]
    pub expectation: Option<f64>,
}

impl Coupling {
    pub fn new(qubit: usize, axis: Axis) -> Self {
        Coupling {
            qubit,
            axis,
            expectation: Some(0.0),
        }
    }

    pub fn with_expectation(mut self, b: f64) -> Self {
        self.expectation = Some(b);
        self
    }

    fn mean(&self) -> f64 {
        self.expectation.unwrap_or(0.0)
    }
}

/// `A e^{−z τ}` for `τ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amplitude: C64,
    pub rate: C64,
}

impl ExpTerm {
    pub fn eval(&self, tau: f64) -> C64 {
        self.amplitude * (-self.rate * tau).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<ExpTerm>,
}

/// Bath two-point functions `C_ij(τ) = ⟨B_i(τ) B_j(0)⟩` between couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Correlations {
    /// Connected (zero-mean) correlations `w(μ_i, μ_j) δ_{a_i a_j} C(τ)`
    /// from a bath model; `bath.g` is ignored in favour of the spec's `g`.
    Bath { bath: BathModel },
    /// Full two-point functions as exponential sums; re-centered by
    /// `⟨B_i⟩⟨B_j⟩` when the means are non-zero.
    Terms { entries: Vec<CorrelationEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub g: f64,
    pub couplings: Vec<Coupling>,
    pub correlations: Correlations,
}

/// Scalar correlation function shared by a block of coupling pairs.
#[derive(Debug, Clone)]
pub(crate) enum ScalarCorrelation {
    Bath(BathModel),
    Terms(Vec<ExpTerm>),
}

impl ScalarCorrelation {
    pub(crate) fn eval(&self, tau: f64) -> C64 {
        match self {
            ScalarCorrelation::Bath(b) => b.correlation(tau),
            ScalarCorrelation::Terms(t) => t.iter().map(|x| x.eval(tau)).sum(),
        }
    }

    pub(crate) fn terms(&self) -> Option<Vec<ExpTerm>> {
        match self {
            ScalarCorrelation::Bath(b) => b.exponential_parts().map(|(a, z)| {
                vec![ExpTerm {
                    amplitude: C64::new(a, 0.0),
                    rate: z,
                }]
            }),
            ScalarCorrelation::Terms(t) => Some(t.clone()),
        }
    }
}

/// `C_ij(τ) = Σ_r W^r_ij c_r(τ)`.
#[derive(Debug, Clone)]
pub(crate) struct Channel {
    pub weights: Array2<f64>,
    pub correlation: ScalarCorrelation,
}

impl InteractionSpec {
    pub fn new(g: f64, couplings: Vec<Coupling>, correlations: Correlations) -> Result<Self> {
        let s = InteractionSpec {
            g,
            couplings,
            correlations,
        };
        s.validate(None)?;
        Ok(s)
    }

    /// Identical `σ^axis` couplings on every qubit sharing one bath model.
    pub fn uniform(g: f64, n: usize, axis: Axis, bath: BathModel) -> Result<Self> {
        let couplings = (0..n).map(|q| Coupling::new(q, axis)).collect();
        Self::new(g, couplings, Correlations::Bath { bath })
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub(crate) fn validate(&self, n: Option<usize>) -> Result<()> {
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::param("g", "must be non-negative"));
        }
        if self.couplings.is_empty() {
            return Err(Error::param("couplings", "at least one coupling is required"));
        }
        if let Some(n) = n {
            for c in &self.couplings {
                if c.qubit >= n {
                    return Err(Error::QubitOutOfRange { index: c.qubit, n });
                }
            }
        }
        let k = self.couplings.len();
        match &self.correlations {
            Correlations::Bath { bath } => {
                bath.validated()?;
                if matches!(bath.kind, CorrelationKind::Delta) {
                    return Err(Error::param(
                        "correlations.bath.kind",
                        "delta correlations have no pointwise values; use exponential or power_law",
                    ));
                }
            }
            Correlations::Terms { entries } => {
                for e in entries {
                    if e.i >= k || e.j >= k {
                        return Err(Error::param(
                            "correlations.entries",
                            "coupling index out of range",
                        ));
                    }
                    if e.terms.iter().any(|t| !(t.rate.re >= 0.0)) {
                        return Err(Error::param(
                            "correlations.entries",
                            "growing correlation terms are not stationary",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn has_means(&self) -> bool {
        self.couplings.iter().any(|c| c.mean() != 0.0)
    }

    /// Correlation time used for the `t₋` truncation; infinite when some
    /// term never decays.
    pub fn tau_env(&self) -> f64 {
        match &self.correlations {
            Correlations::Bath { bath } => bath.tau_env,
            Correlations::Terms { entries } => entries
                .iter()
                .flat_map(|e| e.terms.iter())
                .map(|t| {
                    if t.rate.re > 0.0 {
                        1.0 / t.rate.re
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max),
        }
    }

    pub(crate) fn channels(&self) -> Vec<Channel> {
        let k = self.couplings.len();
        let mut out = Vec::new();
        match &self.correlations {
            Correlations::Bath { bath } => {
                let w = Array2::from_shape_fn((k, k), |(i, j)| {
                    let (a, b) = (&self.couplings[i], &self.couplings[j]);
                    if a.axis == b.axis {
                        bath.spatial.weight(a.qubit, b.qubit)
                    } else {
                        0.0
                    }
                });
                out.push(Channel {
                    weights: w,
                    correlation: ScalarCorrelation::Bath(*bath),
                });
            }
            Correlations::Terms { entries } => {
                for e in entries {
                    let mut w = Array2::zeros((k, k));
                    w[[e.i, e.j]] = 1.0;
                    out.push(Channel {
                        weights: w,
                        correlation: ScalarCorrelation::Terms(e.terms.clone()),
                    });
                }
                if self.has_means() {
                    let w = Array2::from_shape_fn((k, k), |(i, j)| {
                        -self.couplings[i].mean() * self.couplings[j].mean()
                    });
                    out.push(Channel {
                        weights: w,
                        correlation: ScalarCorrelation::Terms(vec![ExpTerm {
                            amplitude: C64::new(1.0, 0.0),
                            rate: C64::new(0.0, 0.0),
                        }]),
                    });
                }
            }
        }
        out
    }
}

/// `⟨H_int⟩_env` and its matrix elements in the Landau–Zener sector.
#[derive(Debug, Clone)]
pub struct FirstOrderShift {
    pub operator: HermitianOperator,
    /// `⟨w|δH|w⟩`
    pub marked: f64,
    /// `⟨s|δH|s⟩`
    pub uniform: f64,
    /// `⟨w|δH|s⟩`, suppressed as `O(g/√N)`
    pub cross: C64,
    /// `δH` in the orthonormal `{|w⟩, |w⊥⟩}` basis.
    pub lz_block: [[C64; 2]; 2],
}

/// `⟨H_int⟩_env = gΩ Σ σ_μ^a ⟨B_μ^a⟩`.
pub fn first_order_shift(spec: &InteractionSpec, p: &GroverProblem) -> Result<FirstOrderShift> {
    let n = p
        .qubits()
        .ok_or_else(|| Error::param("problem", "first-order shift needs a qubit register"))?;
    spec.validate(Some(n))?;
    let mut m = CMatrix::zeros((p.dim, p.dim));
    for (k, c) in spec.couplings.iter().enumerate() {
        let b = c.expectation.ok_or_else(|| {
            Error::param(
                "couplings.expectation",
                format!("coupling {k} has no bath expectation"),
            )
        })?;
        if b != 0.0 {
            m = m + pauli_operator(c.axis, c.qubit, n)?.matrix() * C64::new(spec.g * p.omega * b, 0.0);
        }
    }
    let w = p.marked_state();
    let s = p.uniform_state();
    let wp = p.marked_complement();
    let el = |u: &crate::quantum::CVector, v: &crate::quantum::CVector| inner(u, &m.dot(v));
    let lz_block = [[el(&w, &w), el(&w, &wp)], [el(&wp, &w), el(&wp, &wp)]];
    Ok(FirstOrderShift {
        marked: el(&w, &w).re,
        uniform: el(&s, &s).re,
        cross: el(&w, &s),
        lz_block,
        operator: HermitianOperator::hermitized(m)?,
    })
}
