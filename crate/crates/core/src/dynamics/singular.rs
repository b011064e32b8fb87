use super::lindblad::{HamiltonianModel, LindbladGenerator};
use super::{BathModel, CorrelationKind, Operator};
use crate::error::{Error, Result};
use crate::quantum::{hermitian_eigensystem, hermitize, CMatrix, HermitianOperator, C64};
use crate::tolerances::TOL;

/// Full-line integrals of the bath correlation matrix,
/// `γ_{αβ} = ∫ C_{αβ}(τ) dτ` and `σ_{αβ} = ∫ sgn(τ) C_{αβ}(τ) dτ`.
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    pub gamma: CMatrix,
    pub sigma: CMatrix,
}

impl CorrelationTable {
    pub fn new(gamma: CMatrix, sigma: CMatrix) -> Result<Self> {
        if gamma.dim() != sigma.dim() || gamma.nrows() != gamma.ncols() {
            return Err(Error::DimensionMismatch {
                expected: gamma.nrows(),
                found: sigma.nrows(),
            });
        }
        Ok(Self { gamma, sigma })
    }

    /// Table for `count` operators sharing one bath model, with every
    /// entry multiplied by `scale`.
    pub fn from_bath(bath: &BathModel, count: usize, scale: f64) -> Result<Self> {
        let k = bath.half_integral()?;
        // γ = K + K*, σ = K − K* for a stationary C with C(−τ) = C(τ)*.
        let (g, s) = match bath.kind {
            CorrelationKind::Delta => (C64::new(bath.gamma0, 0.0), C64::new(0.0, 0.0)),
            _ => (k + k.conj(), k - k.conj()),
        };
        let gamma = CMatrix::from_shape_fn((count, count), |(a, b)| g * (scale * bath.spatial.weight(a, b)));
        let sigma = CMatrix::from_shape_fn((count, count), |(a, b)| s * (scale * bath.spatial.weight(a, b)));
        Self::new(gamma, sigma)
    }
}

/// Result of building the singular-coupling master equation.
#[derive(Debug, Clone)]
pub struct SingularCoupling {
    pub generator: LindbladGenerator,
    /// `(g²/2i) Σ σ_{αβ} A_α A_β`
    pub lamb_shift: HermitianOperator,
    /// Eigenvalues of `γ`, clamped at zero.
    pub rates: Vec<f64>,
}

/// Lindblad generator `g² Σ γ_{αβ}[A_β ρ A_α − ½{A_α A_β, ρ}]` with the Lamb
/// shift added to `hamiltonian`.
///
/// `γ = U Λ U†` gives jump operators `L_k = g √λ_k Σ_β U*_{βk} A_β`.
pub fn singular_coupling_generator(
    ops: &[HermitianOperator],
    table: &CorrelationTable,
    g: f64,
    hamiltonian: HamiltonianModel,
) -> Result<SingularCoupling> {
    let count = ops.len();
    if table.gamma.nrows() != count {
        return Err(Error::DimensionMismatch {
            expected: count,
            found: table.gamma.nrows(),
        });
    }
    let dim = hamiltonian.dim();
    for a in ops {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.dim(),
            });
        }
    }
    let gamma = HermitianOperator::new(table.gamma.clone())
        .or_else(|_| HermitianOperator::hermitized(table.gamma.clone()))?;
    let eig = hermitian_eigensystem(&gamma)?;
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if eig.values[0] < -TOL.psd * scale {
        return Err(Error::NotPositiveSemidefinite {
            min_eig: eig.values[0],
        });
    }
    let rates: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();

    let mut jumps = Vec::new();
    for (k, &lam) in rates.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let mut l = CMatrix::zeros((dim, dim));
        for (b, a) in ops.iter().enumerate() {
            l.scaled_add(eig.vectors[[b, k]].conj() * (g * lam.sqrt()), a.matrix());
        }
        jumps.push(Operator::Dense(l));
    }

    let mut shift = CMatrix::zeros((dim, dim));
    for (a, aa) in ops.iter().enumerate() {
        for (b, ab) in ops.iter().enumerate() {
            let s = table.sigma[[a, b]];
            if s != C64::new(0.0, 0.0) {
                shift.scaled_add(s * C64::new(0.0, -0.5 * g * g), &aa.matrix().dot(ab.matrix()));
            }
        }
    }
    let lamb_shift = HermitianOperator::new(shift.clone())
        .or_else(|_| HermitianOperator::hermitized(hermitize(&shift)))?;
    let mut generator = LindbladGenerator::new(hamiltonian, jumps)?;
    if shift.iter().any(|z| z.norm() > 0.0) {
        generator = generator.with_shift(Operator::Dense(lamb_shift.matrix().clone()))?;
    }
    Ok(SingularCoupling {
        generator,
        lamb_shift,
        rates,
    })
}
