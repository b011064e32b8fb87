use ndarray::{s, Array2, Axis as NdAxis};
use num_complex::ComplexFloat;

use super::{re, CMatrix, CVector, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::eye(dim)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + &dagger(m)) * re(0.5)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) + b.dot(a)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().iter().copied().sum()
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.abs()).fold(0.0, f64::max)
}

pub fn vector_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u|v⟩`
pub fn inner(u: &CVector, v: &CVector) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// `|u⟩⟨v|`
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    let n = u.len();
    let m = v.len();
    Array2::from_shape_fn((n, m), |(i, j)| u[i] * v[j].conj())
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMatrix::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                .assign(&(b * aij));
        }
    }
    out
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Traces out the trailing factor of a `dim_a·dim_b` operator.
pub fn partial_trace_right(m: &CMatrix, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    if m.nrows() != dim_a * dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim_a * dim_b,
            found: m.nrows(),
        });
    }
    let mut out = CMatrix::zeros((dim_a, dim_a));
    for i in 0..dim_a {
        for j in 0..dim_a {
            let mut acc = ZERO;
            for k in 0..dim_b {
                acc += m[[i * dim_b + k, j * dim_b + k]];
            }
            out[[i, j]] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix of the leading factor for a pure joint state.
pub fn reduced_from_pure(psi: &CVector, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    if psi.len() != dim_a * dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim_a * dim_b,
            found: psi.len(),
        });
    }
    let mat = psi.view().into_shape_with_order((dim_a, dim_b)).unwrap();
    let conj = mat.mapv(|z| z.conj());
    Ok(mat.dot(&conj.t()))
}

/// Eigenvalues (ascending) of a matrix assumed Hermitian.
pub fn eigenvalues_hermitian(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 1 {
        return vec![m[[0, 0]].re];
    }
    if n == 2 {
        let a = m[[0, 0]].re;
        let d = m[[1, 1]].re;
        let b = m[[0, 1]];
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return vec![mean - r, mean + r];
    }
    let mut values: Vec<f64> = if m.iter().all(|z| z.im == 0.0) {
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]].re + m[[j, i]].re));
        nalgebra::SymmetricEigen::new(dm)
            .eigenvalues
            .iter()
            .copied()
            .collect()
    } else {
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
        dm.symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    values
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    eigenvalues_hermitian(m)
        .first()
        .copied()
        .ok_or(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        })
}

/// Trace distance `½‖A − B‖₁` of two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * eigenvalues_hermitian(&(a - b))
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

/// `exp(−i H t)` for Hermitian `H` via its spectral decomposition.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (h[[i, j]] + h[[j, i]].conj()));
    let eig = nalgebra::SymmetricEigen::new(dm);
    let v = &eig.eigenvectors;
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * t))
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        (0..n).map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj()).sum()
    })
}

pub fn diag_real(m: &CMatrix) -> Vec<f64> {
    m.diag().iter().map(|z| z.re).collect()
}

pub fn column(m: &CMatrix, j: usize) -> CVector {
    m.index_axis(NdAxis(1), j).to_owned()
}
