use std::sync::Arc;

use super::{Generator, Operator};
use crate::error::{Error, Result};
use crate::grover::GroverProblem;
use crate::quantum::{
    hermitian_eigensystem, same_dim, CMatrix, CVector, DensityMatrix, HermitianOperator, C64, I,
};

/// `−i[H, ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`
pub fn lindblad_rhs(rho: &DensityMatrix, h: &HermitianOperator, jumps: &[CMatrix]) -> Result<CMatrix> {
    let dim = rho.dim();
    same_dim(dim, h.dim())?;
    let ops: Vec<Operator> = jumps
        .iter()
        .map(|l| {
            same_dim(dim, l.nrows())?;
            same_dim(dim, l.ncols())?;
            Ok(Operator::Dense(l.clone()))
        })
        .collect::<Result<_>>()?;
    let jdj: Vec<Operator> = ops.iter().map(|l| l.adjoint().compose(l)).collect();
    Ok(lindblad_action(
        rho.matrix(),
        &Operator::Dense(h.matrix().clone()),
        &ops,
        &jdj,
    ))
}

/// Lindblad action with pre-computed `L†L` products.
pub(crate) fn lindblad_action(rho: &CMatrix, h: &Operator, jumps: &[Operator], jdj: &[Operator]) -> CMatrix {
    let mut out = (h.left_mul(rho) - h.right_mul(rho)) * (-I);
    for (l, ll) in jumps.iter().zip(jdj) {
        out += &l.sandwich(rho);
        out.scaled_add(C64::new(-0.5, 0.0), &ll.left_mul(rho));
        out.scaled_add(C64::new(-0.5, 0.0), &ll.right_mul(rho));
    }
    out
}

/// Source of the (possibly schedule-dependent) system Hamiltonian.
#[derive(Clone)]
pub enum HamiltonianModel {
    Static(Operator),
    /// `H(f)` of the Grover problem, kept in rank-two form.
    Grover(GroverProblem),
    Custom {
        dim: usize,
        build: Arc<dyn Fn(f64) -> Result<Operator> + Send + Sync>,
    },
}

impl std::fmt::Debug for HamiltonianModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HamiltonianModel::Static(op) => write!(f, "Static(dim={})", op.dim()),
            HamiltonianModel::Grover(p) => write!(f, "Grover({p:?})"),
            HamiltonianModel::Custom { dim, .. } => write!(f, "Custom(dim={dim})"),
        }
    }
}

impl HamiltonianModel {
    pub fn dim(&self) -> usize {
        match self {
            HamiltonianModel::Static(op) => op.dim(),
            HamiltonianModel::Grover(p) => p.dim,
            HamiltonianModel::Custom { dim, .. } => *dim,
        }
    }

    pub fn at(&self, f: f64) -> Result<Operator> {
        match self {
            HamiltonianModel::Static(op) => Ok(op.clone()),
            HamiltonianModel::Grover(p) => grover_operator(p, f),
            HamiltonianModel::Custom { build, .. } => build(f),
        }
    }
}

/// `−Ω[f|s⟩⟨s| + (1−f)|w⟩⟨w|]` in rank-two form.
pub fn grover_operator(p: &GroverProblem, f: f64) -> Result<Operator> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::param("f", format!("{f} outside [0, 1]")));
    }
    let s = p.uniform_state();
    let w = p.marked_state();
    Ok(Operator::projector(-p.omega * f, &s).plus(&Operator::projector(-p.omega * (1.0 - f), &w)))
}

/// Lindblad generator with a schedule-dependent Hamiltonian and fixed jumps.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    hamiltonian: HamiltonianModel,
    shift: Option<Operator>,
    jumps: Vec<Operator>,
    jdj: Vec<Operator>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: HamiltonianModel, jumps: Vec<Operator>) -> Result<Self> {
        let dim = hamiltonian.dim();
        for l in &jumps {
            same_dim(dim, l.dim())?;
        }
        let jdj = jumps.iter().map(|l| l.adjoint().compose(l)).collect();
        Ok(Self {
            hamiltonian,
            shift: None,
            jumps,
            jdj,
        })
    }

    pub fn from_dense(h: &HermitianOperator, jumps: &[CMatrix]) -> Result<Self> {
        Self::new(
            HamiltonianModel::Static(Operator::Dense(h.matrix().clone())),
            jumps.iter().map(|l| Operator::Dense(l.clone())).collect(),
        )
    }

    /// Adds a constant Hermitian term (e.g. a Lamb shift) to the Hamiltonian.
    pub fn with_shift(mut self, shift: Operator) -> Result<Self> {
        same_dim(self.hamiltonian.dim(), shift.dim())?;
        self.shift = Some(shift);
        Ok(self)
    }

    pub fn jumps(&self) -> &[Operator] {
        &self.jumps
    }

    pub fn hamiltonian_model(&self) -> &HamiltonianModel {
        &self.hamiltonian
    }
}

impl Generator for LindbladGenerator {
    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn hamiltonian(&self, f: f64) -> Result<Operator> {
        let h = self.hamiltonian.at(f)?;
        Ok(match &self.shift {
            Some(s) => h.plus(s),
            None => h,
        })
    }

    fn rhs(&self, _t: f64, f: f64, rho: &CMatrix) -> Result<CMatrix> {
        let h = self.hamiltonian(f)?;
        Ok(lindblad_action(rho, &h, &self.jumps, &self.jdj))
    }

    fn levels(&self, f: f64) -> Result<(CVector, CVector)> {
        match (&self.hamiltonian, &self.shift) {
            (HamiltonianModel::Grover(p), None) => Ok(p.instantaneous_states(f)),
            _ => dense_levels(&self.hamiltonian(f)?),
        }
    }
}

pub(crate) fn dense_levels(h: &Operator) -> Result<(CVector, CVector)> {
    let e = hermitian_eigensystem(&HermitianOperator::hermitized(h.to_dense())?)?;
    if e.values.len() < 2 {
        return Err(Error::param("dim", "at least two levels are required"));
    }
    Ok((e.vector(0), e.vector(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sy(omega: f64) -> HermitianOperator {
        pauli_operator(Axis::Y, 0, 1).unwrap().scaled(omega)
    }

    #[test]
    fn unitary_bloch_rates() {
        // |↑⟩ taken as the σ_z = +1 state: d⟨σ_x⟩/dt = 2Ω⟨σ_z⟩, d⟨σ_z⟩/dt = −2Ω⟨σ_x⟩
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let d = lindblad_rhs(&rho, &sy(1.0), &[]).unwrap();
        let x = Axis::X.matrix();
        let z = Axis::Z.matrix();
        assert!((trace_product(&d, &z).re).abs() < 1e-15);
        assert!((trace_product(&d, &x).re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dephasing_rate() {
        let g: f64 = 0.7;
        let h = 1.0 / 2f64.sqrt();
        let rho = DensityMatrix::pure(&ndarray::arr1(&[re(h), re(h)])).unwrap();
        let l = Axis::Z.matrix() * re(g.sqrt());
        let d = lindblad_rhs(&rho, &HermitianOperator::zeros(2), &[l.clone()]).unwrap();
        assert!((d[[0, 1]].re / rho.matrix()[[0, 1]].re + 2.0 * g).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2);
        let d = lindblad_rhs(&mixed, &HermitianOperator::zeros(2), &[l]).unwrap();
        assert!(max_abs(&d) < 1e-16);
    }

    #[test]
    fn output_is_hermitian_and_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in [2, 3, 8] {
            let rho = random_density(dim, &mut rng);
            let h = random_hermitian(dim, &mut rng);
            let jumps: Vec<CMatrix> = (0..3)
                .map(|_| {
                    let a = random_hermitian(dim, &mut rng).into_matrix();
                    let b = random_hermitian(dim, &mut rng).into_matrix();
                    a + b * I
                })
                .collect();
            let d = lindblad_rhs(&rho, &h, &jumps).unwrap();
            assert!(trace(&d).norm() < 1e-10);
            assert!(frobenius_norm(&(&d - &dagger(&d))) < 1e-10);
        }
    }

    #[test]
    fn grover_operator_matches_dense() {
        let p = GroverProblem::new(3, 1.3).unwrap();
        let op = grover_operator(&p, 0.4).unwrap();
        let dense = crate::grover::grover_hamiltonian(&p, 0.4).unwrap();
        assert!(frobenius_norm(&(op.to_dense() - dense.matrix())) < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(lindblad_rhs(&rho, &HermitianOperator::zeros(4), &[]).is_err());
    }
}
