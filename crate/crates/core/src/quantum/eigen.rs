use ndarray::Array2;

use super::{hermiticity_deviation, CMatrix, CVector, HermitianOperator, C64};
use crate::error::{Error, Result};
use crate::tolerances::TOL;

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).to_owned()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        Array2::from_shape_fn((n, n), |(i, j)| {
            (0..n)
                .map(|k| v[[i, k]] * self.values[k] * v[[j, k]].conj())
                .sum()
        })
    }
}

/// Spectral decomposition with deterministic ordering and phases.
///
/// Eigenvalues are sorted ascending. Within a (numerically) degenerate
/// cluster vectors are ordered by the index of their largest-magnitude
/// component, and every vector is rephased so that this component is real
/// and positive.
pub fn hermitian_eigensystem(h: &HermitianOperator) -> Result<EigenSystem> {
    let m = h.matrix();
    let deviation = hermiticity_deviation(m);
    if deviation > TOL.hermitian {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.nrows();
    let (values, vectors): (Vec<f64>, CMatrix) = if m.iter().all(|z| z.im == 0.0) {
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]].re + m[[j, i]].re));
        let e = nalgebra::SymmetricEigen::new(dm);
        (
            e.eigenvalues.iter().copied().collect(),
            Array2::from_shape_fn((n, n), |(i, j)| C64::new(e.eigenvectors[(i, j)], 0.0)),
        )
    } else {
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
        let e = nalgebra::SymmetricEigen::new(dm);
        (
            e.eigenvalues.iter().copied().collect(),
            Array2::from_shape_fn((n, n), |(i, j)| e.eigenvectors[(i, j)]),
        )
    };

    let pivot = |k: usize| -> usize {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..n {
            // Small slack so that equal-magnitude components resolve to the
            // lowest index regardless of rounding.
            let a = vectors[[i, k]].norm();
            if a > best_abs * (1.0 + 1e-10) {
                best_abs = a;
                best = i;
            }
        }
        best
    };
    let pivots: Vec<usize> = (0..n).map(pivot).collect();

    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tie = 1e-10 * scale;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] - values[order[end - 1]] <= tie {
            end += 1;
        }
        order[start..end].sort_by_key(|&k| pivots[k]);
        start = end;
    }

    let sorted_values: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = CMatrix::zeros((n, n));
    for (dst, &k) in order.iter().enumerate() {
        let p = vectors[[pivots[k], k]];
        let phase = if p.norm() > 0.0 {
            p.conj() / p.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            sorted_vectors[[i, dst]] = vectors[[i, k]] * phase;
        }
    }
    Ok(EigenSystem {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}
