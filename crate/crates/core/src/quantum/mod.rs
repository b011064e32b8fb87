//! Dense complex linear algebra and the state functionals used throughout.
//!
//! Basis convention: computational basis states are ordered
//! lexicographically with qubit 0 as the most significant bit, and
//! `|↑⟩ = |1⟩`, `|↓⟩ = |0⟩`.

mod eigen;
mod ops;
mod random;

pub use eigen::{hermitian_eigensystem, EigenSystem};
pub use ops::*;
pub use random::{random_density, random_hermitian, random_pure_state, random_unitary};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::{MAX_QUBITS, TOL};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Axis::X => ndarray::arr2(&[[ZERO, ONE], [ONE, ZERO]]),
            Axis::Y => ndarray::arr2(&[[ZERO, -I], [I, ZERO]]),
            Axis::Z => ndarray::arr2(&[[ONE, ZERO], [ZERO, -ONE]]),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::param("axis", format!("`{s}` is not one of x, y, z"))),
        }
    }
}

fn check_square_finite(m: &CMatrix) -> Result<()> {
    let (r, cols) = m.dim();
    if r != cols {
        return Err(Error::NotSquare { rows: r, cols });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Relative Frobenius deviation `‖M − M†‖ / ‖M‖` (absolute when `M = 0`).
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut diff = 0.0;
    for i in 0..n {
        for j in 0..n {
            diff += (m[[i, j]] - m[[j, i]].conj()).norm_sqr();
        }
    }
    let norm = frobenius_norm(m);
    if norm > 0.0 {
        diff.sqrt() / norm
    } else {
        diff.sqrt()
    }
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_finite(&m)?;
        let deviation = hermiticity_deviation(&m);
        if deviation > TOL.hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(m))
    }

    /// Wraps `(M + M†)/2`, for matrices that are Hermitian up to rounding.
    pub fn hermitized(m: CMatrix) -> Result<Self> {
        check_square_finite(&m)?;
        Ok(Self(hermitize(&m)))
    }

    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(&self.0 * re(a))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 + &other.0))
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_finite(&m)?;
        let deviation = hermiticity_deviation(&m);
        if deviation > TOL.hermitian.max(1e-10) {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {deviation:.3e})"
            )));
        }
        let tr = trace(&m);
        if (tr.re - 1.0).abs() > TOL.trace || tr.im.abs() > TOL.trace {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {:.12} + {:.3e}i",
                tr.re, tr.im
            )));
        }
        let min = min_eigenvalue(&m)?;
        if min < -TOL.positivity {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix without the positivity check, as needed for states
    /// produced by non-positivity-preserving generators.
    pub fn new_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = vector_norm(psi);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "state vector norm {norm:.12}"
            )));
        }
        Ok(Self(outer(psi, psi)))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut m = CMatrix::zeros((dim, dim));
        m[[index, index]] = ONE;
        Ok(Self(m))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim) * re(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn purity(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0).unwrap_or(f64::NAN)
    }
}

pub(crate) fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// `σ_axis` acting on qubit `mu` of an `n`-qubit register.
pub fn pauli_operator(axis: Axis, mu: usize, n: usize) -> Result<HermitianOperator> {
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
    }
    if mu >= n {
        return Err(Error::QubitOutOfRange { index: mu, n });
    }
    let dim = 1usize << n;
    let bit = n - 1 - mu;
    let mut m = CMatrix::zeros((dim, dim));
    for col in 0..dim {
        let b = (col >> bit) & 1;
        let flipped = col ^ (1 << bit);
        match axis {
            Axis::Z => m[[col, col]] = if b == 0 { ONE } else { -ONE },
            Axis::X => m[[flipped, col]] = ONE,
            // σ_y|0⟩ = i|1⟩, σ_y|1⟩ = −i|0⟩
            Axis::Y => m[[flipped, col]] = if b == 0 { I } else { -I },
        }
    }
    Ok(HermitianOperator(m))
}

/// `σ_axis^{(mu)} v` without building the matrix.
pub fn apply_pauli(axis: Axis, mu: usize, n: usize, v: &CVector) -> Result<CVector> {
    if mu >= n {
        return Err(Error::QubitOutOfRange { index: mu, n });
    }
    let dim = 1usize << n;
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    let bit = 1usize << (n - 1 - mu);
    let mut out = CVector::zeros(dim);
    for (i, &x) in v.iter().enumerate() {
        let up = i & bit == 0;
        match axis {
            Axis::Z => out[i] = if up { x } else { -x },
            Axis::X => out[i ^ bit] = x,
            Axis::Y => out[i ^ bit] = if up { I * x } else { -I * x },
        }
    }
    Ok(out)
}

/// Von Neumann entropy in nats; eigenvalues below the floor contribute zero.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let values = eigenvalues_hermitian(rho.matrix());
    let s: f64 = values
        .iter()
        .filter(|&&p| p > TOL.entropy_floor)
        .map(|&p| -p * p.ln())
        .sum();
    s.max(0.0)
}

/// `Tr(ρA)` with the (rounding-level) imaginary part discarded.
pub fn expectation(rho: &DensityMatrix, a: &HermitianOperator) -> Result<f64> {
    same_dim(rho.dim(), a.dim())?;
    Ok(trace_product(rho.matrix(), a.matrix()).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matrix_free_pauli_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_pure_state(8, &mut rng);
        for axis in Axis::ALL {
            for mu in 0..3 {
                let dense = pauli_operator(axis, mu, 3).unwrap().matrix().dot(&v);
                let free = apply_pauli(axis, mu, 3, &v).unwrap();
                assert!(vector_norm(&(dense - free)) < 1e-15);
            }
        }
    }

    #[test]
    fn pauli_single_qubit() {
        let z = pauli_operator(Axis::Z, 0, 1).unwrap();
        assert_eq!(z.matrix(), &Axis::Z.matrix());
        let x = pauli_operator(Axis::X, 0, 1).unwrap();
        let y = pauli_operator(Axis::Y, 0, 1).unwrap();
        let comm = commutator(x.matrix(), y.matrix());
        let expected = z.matrix() * c(0.0, 2.0);
        assert!(frobenius_norm(&(comm - expected)) < 1e-15);
    }

    #[test]
    fn pauli_placement_is_msb_first() {
        let z = pauli_operator(Axis::Z, 1, 2).unwrap();
        let d: Vec<f64> = (0..4).map(|i| z.matrix()[[i, i]].re).collect();
        assert_eq!(d, vec![1.0, -1.0, 1.0, -1.0]);
        let z0 = pauli_operator(Axis::Z, 0, 2).unwrap();
        let d0: Vec<f64> = (0..4).map(|i| z0.matrix()[[i, i]].re).collect();
        assert_eq!(d0, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn pauli_matches_kronecker_products() {
        for axis in Axis::ALL {
            let p = pauli_operator(axis, 1, 3).unwrap();
            let k = kron(&kron(&identity(2), &axis.matrix()), &identity(2));
            assert!(frobenius_norm(&(p.matrix() - &k)) < 1e-15);
        }
    }

    #[test]
    fn pauli_errors() {
        assert!(matches!(
            pauli_operator(Axis::X, 3, 3),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            pauli_operator(Axis::X, 0, 15),
            Err(Error::TooManyQubits { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::basis(2, 0).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure), 0.0, epsilon = 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(von_neumann_entropy(&mixed), 2f64.ln(), epsilon = 1e-14);
        let mut m = CMatrix::zeros((2, 2));
        m[[0, 0]] = re(0.75);
        m[[1, 1]] = re(0.25);
        let rho = DensityMatrix::new(m).unwrap();
        let s = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert_abs_diff_eq!(von_neumann_entropy(&rho), s, epsilon = 1e-14);
        assert_abs_diff_eq!(von_neumann_entropy(&rho), 0.5623, epsilon = 1e-4);
    }

    #[test]
    fn expectation_examples() {
        let z = pauli_operator(Axis::Z, 0, 1).unwrap();
        let x = pauli_operator(Axis::X, 0, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(expectation(&mixed, &z).unwrap(), 0.0);
        let up = DensityMatrix::basis(2, 0).unwrap();
        assert_abs_diff_eq!(expectation(&up, &z).unwrap(), 1.0);
        let h = 1.0 / 2f64.sqrt();
        let plus = DensityMatrix::pure(&ndarray::arr1(&[re(h), re(h)])).unwrap();
        assert_abs_diff_eq!(expectation(&plus, &x).unwrap(), 1.0, epsilon = 1e-15);
        let z2 = pauli_operator(Axis::Z, 0, 2).unwrap();
        assert!(matches!(
            expectation(&up, &z2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = CMatrix::zeros((2, 2));
        m[[0, 0]] = re(1.2);
        m[[1, 1]] = re(-0.2);
        assert!(DensityMatrix::new(m).is_err());
        let mut m = CMatrix::zeros((2, 2));
        m[[0, 1]] = ONE;
        assert!(DensityMatrix::new(m).is_err());
        assert!(HermitianOperator::new(ndarray::arr2(&[[ZERO, ONE], [ZERO, ZERO]])).is_err());
    }
}
