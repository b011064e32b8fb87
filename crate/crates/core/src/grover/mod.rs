//! Adiabatic Grover search: Hamiltonian, two-level reductions, gap and
//! interpolation schedules.

mod schedule;

pub use schedule::{adaptive_integral, schedule_adaptive, schedule_constant, Schedule, ScheduleKind};

use ndarray::arr2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    basis_vector, hermitian_eigensystem, inner, outer, re, vector_norm, CMatrix, CVector, HermitianOperator,
    C64,
};
use crate::tolerances::{MAX_QUBITS, TOL};

/// Search problem of size `dim` with energy scale `omega` and one marked item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroverProblem {
    pub dim: usize,
    pub omega: f64,
    pub marked: usize,
}

impl GroverProblem {
    /// `n`-qubit problem with the marked item at index 0.
    pub fn new(n: usize, omega: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "at least one qubit is required"));
        }
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        Self::with_dim(1 << n, omega)
    }

    /// Problem of arbitrary database size. Only the reduced models and the
    /// closed-form gap are meaningful when `dim` is not a power of two.
    pub fn with_dim(dim: usize, omega: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("N", "database size must be at least 2"));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::param("omega", format!("must be positive, got {omega}")));
        }
        Ok(Self {
            dim,
            omega,
            marked: 0,
        })
    }

    pub fn with_marked(mut self, marked: usize) -> Result<Self> {
        if marked >= self.dim {
            return Err(Error::param(
                "marked",
                format!("index {marked} outside [0, {})", self.dim),
            ));
        }
        self.marked = marked;
        Ok(self)
    }

    pub fn qubits(&self) -> Option<usize> {
        self.dim
            .is_power_of_two()
            .then(|| self.dim.trailing_zeros() as usize)
    }

    pub fn size(&self) -> f64 {
        self.dim as f64
    }

    pub fn min_gap(&self) -> f64 {
        self.omega / self.size().sqrt()
    }

    /// Uniform superposition `|s⟩`.
    pub fn uniform_state(&self) -> CVector {
        CVector::from_elem(self.dim, re(1.0 / self.size().sqrt()))
    }

    pub fn marked_state(&self) -> CVector {
        basis_vector(self.dim, self.marked)
    }

    /// `|w⊥⟩ ∝ |s⟩ − ⟨w|s⟩|w⟩`
    pub fn marked_complement(&self) -> CVector {
        let nf = self.size();
        let a = 1.0 / (nf * (1.0 - 1.0 / nf)).sqrt();
        let mut v = CVector::from_elem(self.dim, re(a));
        v[self.marked] = re(0.0);
        v
    }

    /// Hamiltonian restricted to the invariant span of `{|w⟩, |w⊥⟩}`.
    pub fn subspace_hamiltonian(&self, f: f64) -> [[f64; 2]; 2] {
        let nf = self.size();
        let o = self.omega;
        let b = -o * f * (nf - 1.0).sqrt() / nf;
        [[-o * (f / nf + 1.0 - f), b], [b, -o * f * (1.0 - 1.0 / nf)]]
    }

    /// Rotation angle of the instantaneous ground state,
    /// `|ψ₀⟩ = cos θ|w⟩ + sin θ|w⊥⟩`, continuous in `f`.
    pub fn mixing_angle(&self, f: f64) -> f64 {
        let [[a, b], [_, d]] = self.subspace_hamiltonian(f);
        0.5 * (-2.0 * b).atan2(d - a)
    }

    /// Exact lowest two eigenvalues `(E₀, E₁)`.
    pub fn subspace_energies(&self, f: f64) -> (f64, f64) {
        let [[a, b], [_, d]] = self.subspace_hamiltonian(f);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - r, mean + r)
    }

    /// Exact instantaneous ground and first excited states with real,
    /// continuous phases.
    pub fn instantaneous_states(&self, f: f64) -> (CVector, CVector) {
        let th = self.mixing_angle(f);
        let w = self.marked_state();
        let wp = self.marked_complement();
        let (s, cth) = th.sin_cos();
        let g = &w * re(cth) + &wp * re(s);
        let e = &w * re(-s) + &wp * re(cth);
        (g, e)
    }
}

fn check_f(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::param("f", format!("{f} outside [0, 1]")));
    }
    Ok(())
}

/// `H = −Ω[f|s⟩⟨s| + (1−f)|w⟩⟨w|]` as a dense matrix.
pub fn grover_hamiltonian(p: &GroverProblem, f: f64) -> Result<HermitianOperator> {
    check_f(f)?;
    if p.dim > 1 << MAX_QUBITS {
        return Err(Error::param("N", format!("{} exceeds the dense limit", p.dim)));
    }
    let s = p.uniform_state();
    let mut m = outer(&s, &s) * re(-p.omega * f);
    m[[p.marked, p.marked]] -= re(p.omega * (1.0 - f));
    Ok(HermitianOperator::new_unchecked(m))
}

/// A 2×2 Hamiltonian with labels for its two basis states.
#[derive(Debug, Clone)]
pub struct TwoLevelHamiltonian {
    pub matrix: HermitianOperator,
    pub labels: (String, String),
}

impl TwoLevelHamiltonian {
    pub fn energies(&self) -> (f64, f64) {
        let v = crate::quantum::eigenvalues_hermitian(self.matrix.matrix());
        (v[0], v[1])
    }

    pub fn splitting(&self) -> f64 {
        let (a, b) = self.energies();
        b - a
    }

    pub fn off_diagonal(&self) -> C64 {
        self.matrix.matrix()[[0, 1]]
    }
}

/// Landau–Zener reduction `−Ω[[1−f, f/√N], [f/√N, f]]` in `{|w⟩, |w⊥⟩}`,
/// dropping `O(1/N)` terms.
pub fn landau_zener_reduced(p: &GroverProblem, f: f64) -> Result<TwoLevelHamiltonian> {
    check_f(f)?;
    let o = p.omega;
    let b = -o * f / p.size().sqrt();
    let m = arr2(&[[re(-o * (1.0 - f)), re(b)], [re(b), re(-o * f)]]);
    Ok(TwoLevelHamiltonian {
        matrix: HermitianOperator::new_unchecked(m),
        labels: ("w".into(), "w_perp".into()),
    })
}

/// `ΔE(f) = Ω √((1−2f)² + 4f²/N)`
pub fn gap(p: &GroverProblem, f: f64) -> Result<f64> {
    check_f(f)?;
    Ok(gap_unchecked(p, f))
}

pub(crate) fn gap_unchecked(p: &GroverProblem, f: f64) -> f64 {
    let u = 1.0 - 2.0 * f;
    p.omega * (u * u + 4.0 * f * f / p.size()).sqrt()
}

/// Two-state projection used for the generalized Landau–Zener estimate.
#[derive(Debug, Clone)]
pub struct LzProjection {
    pub hamiltonian: TwoLevelHamiltonian,
    /// `2|⟨in|H|out⟩|`, the minimum gap once the diagonals are tuned equal.
    pub min_gap: f64,
    /// `|⟨in|out⟩|` before orthonormalization.
    pub overlap: f64,
}

/// Projects `H` onto `{|in⟩, |out⟩}` after Gram–Schmidt of `|out⟩`
/// against `|in⟩`.
pub fn generalized_lz_projection(
    h: &HermitianOperator,
    in_state: &CVector,
    out_state: &CVector,
) -> Result<LzProjection> {
    let dim = h.dim();
    for v in [in_state, out_state] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let norm = vector_norm(v);
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::param("state", format!("norm {norm} is not 1")));
        }
    }
    let ov = inner(in_state, out_state);
    let overlap = ov.norm();
    if overlap >= TOL.max_overlap {
        return Err(Error::ParallelStates { overlap });
    }
    let mut out = out_state - &(in_state * ov);
    let norm = vector_norm(&out);
    out /= re(norm);

    let hm = h.matrix();
    let h_in = hm.dot(in_state);
    let h_out = hm.dot(&out);
    let a = inner(in_state, &h_in);
    let b = inner(in_state, &h_out);
    let d = inner(&out, &h_out);
    let m: CMatrix = arr2(&[[re(a.re), b], [b.conj(), re(d.re)]]);
    Ok(LzProjection {
        hamiltonian: TwoLevelHamiltonian {
            matrix: HermitianOperator::new_unchecked(m),
            labels: ("in".into(), "out".into()),
        },
        min_gap: 2.0 * b.norm(),
        overlap,
    })
}

/// Lowest two eigenvalues of the dense Hamiltonian (full eigensolve).
pub fn dense_low_energies(p: &GroverProblem, f: f64) -> Result<(f64, f64)> {
    let h = grover_hamiltonian(p, f)?;
    let e = hermitian_eigensystem(&h)?;
    Ok((e.values[0], e.values[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{eigenvalues_hermitian, frobenius_norm, random_hermitian, random_pure_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hamiltonian_endpoints() {
        let p = GroverProblem::new(3, 1.0).unwrap();
        let e = hermitian_eigensystem(&grover_hamiltonian(&p, 1.0).unwrap()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        let ov = inner(&e.vector(0), &p.uniform_state()).norm();
        assert!((ov - 1.0).abs() < 1e-12);
        let e = hermitian_eigensystem(&grover_hamiltonian(&p, 0.0).unwrap()).unwrap();
        assert!((e.vector(0)[0].norm() - 1.0).abs() < 1e-12);
        assert!(grover_hamiltonian(&p, 1.5).is_err());
    }

    #[test]
    fn minimum_gap_n2() {
        let p = GroverProblem::new(2, 1.0).unwrap();
        let (e0, e1) = dense_low_energies(&p, 0.5).unwrap();
        assert!((e1 - e0 - 0.5).abs() < 1e-12);
        assert!((gap(&p, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reduced_model_examples() {
        let p = GroverProblem::with_dim(1000, 1.0).unwrap();
        let lz = landau_zener_reduced(&p, 0.0).unwrap();
        let m = lz.matrix.matrix();
        assert_eq!((m[[0, 0]].re, m[[1, 1]].re, m[[0, 1]].re), (-1.0, 0.0, 0.0));
        let lz = landau_zener_reduced(&p, 0.5).unwrap();
        assert!((lz.splitting() - 1.0 / 1000f64.sqrt()).abs() < 1e-12);
        let p = GroverProblem::new(4, 2.0).unwrap();
        let lz = landau_zener_reduced(&p, 0.3).unwrap();
        assert!((lz.splitting() - gap(&p, 0.3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exact_subspace_gap_at_half() {
        for n in 1..=12 {
            let p = GroverProblem::new(n, 1.3).unwrap();
            let (e0, e1) = p.subspace_energies(0.5);
            assert!((e1 - e0 - p.min_gap()).abs() < 1e-12);
        }
    }

    #[test]
    fn instantaneous_states_are_eigenvectors() {
        let p = GroverProblem::new(4, 1.0).unwrap();
        for &f in &[0.0, 0.2, 0.5, 0.77, 1.0] {
            let h = grover_hamiltonian(&p, f).unwrap();
            let (g, e) = p.instantaneous_states(f);
            let (e0, e1) = p.subspace_energies(f);
            let rg = h.matrix().dot(&g) - &g * re(e0);
            let re1 = h.matrix().dot(&e) - &e * re(e1);
            assert!(vector_norm(&rg) < 1e-12 && vector_norm(&re1) < 1e-12);
        }
        let (g1, _) = p.instantaneous_states(1.0);
        assert!((inner(&g1, &p.uniform_state()).re - 1.0).abs() < 1e-12);
        let (g0, _) = p.instantaneous_states(0.0);
        assert!((g0[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rest_sector_is_degenerate_zero() {
        for n in 2..=6 {
            let p = GroverProblem::new(n, 1.0).unwrap();
            let h = grover_hamiltonian(&p, 0.37).unwrap();
            let v = eigenvalues_hermitian(h.matrix());
            let zeros = v.iter().filter(|x| x.abs() < 1e-10).count();
            assert_eq!(zeros, p.dim - 2);
        }
    }

    #[test]
    fn marked_index_is_a_relabeling() {
        let p0 = GroverProblem::new(4, 1.0).unwrap();
        let p5 = p0.with_marked(5).unwrap();
        let a = eigenvalues_hermitian(grover_hamiltonian(&p0, 0.4).unwrap().matrix());
        let b = eigenvalues_hermitian(grover_hamiltonian(&p5, 0.4).unwrap().matrix());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn lz_projection_grover() {
        let p = GroverProblem::new(6, 1.0).unwrap();
        let h = grover_hamiltonian(&p, 0.5).unwrap();
        let proj = generalized_lz_projection(&h, &p.uniform_state(), &p.marked_state()).unwrap();
        let nf = p.size();
        assert!((proj.off_diagonal_abs() - 1.0 / (2.0 * nf.sqrt())).abs() < 1.0 / nf);
        assert!((proj.min_gap - p.min_gap()).abs() < 2.0 / nf);
    }

    #[test]
    fn lz_projection_diagonal_and_parallel() {
        let mut m = CMatrix::zeros((4, 4));
        for i in 0..4 {
            m[[i, i]] = re(i as f64);
        }
        let h = HermitianOperator::new(m).unwrap();
        let proj = generalized_lz_projection(&h, &basis_vector(4, 0), &basis_vector(4, 2)).unwrap();
        assert_eq!(proj.min_gap, 0.0);
        assert!(matches!(
            generalized_lz_projection(&h, &basis_vector(4, 1), &basis_vector(4, 1)),
            Err(Error::ParallelStates { .. })
        ));
    }

    #[test]
    fn lz_projection_is_bracketed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = random_hermitian(16, &mut rng);
            let full = eigenvalues_hermitian(h.matrix());
            let a = random_pure_state(16, &mut rng);
            let b = random_pure_state(16, &mut rng);
            let proj = generalized_lz_projection(&h, &a, &b).unwrap();
            let (lo, hi) = proj.hamiltonian.energies();
            assert!(lo >= full[0] - 1e-10 && hi <= full[15] + 1e-10);
            assert!(
                frobenius_norm(
                    &(proj.hamiltonian.matrix.matrix()
                        - &crate::quantum::dagger(proj.hamiltonian.matrix.matrix()))
                ) < 1e-12
            );
        }
    }
}

impl LzProjection {
    pub fn off_diagonal_abs(&self) -> f64 {
        self.hamiltonian.off_diagonal().norm()
    }
}
