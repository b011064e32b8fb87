use ndarray::Zip;

use crate::quantum::{dagger, inner, outer, CMatrix, CVector, C64, ZERO};

/// An operator stored either densely or as a short sum `Σ c |u⟩⟨v|`.
///
/// Grover Hamiltonians and their projector jump operators are rank one or
/// two, which makes every product `O(N²)` instead of `O(N³)`.
#[derive(Debug, Clone)]
pub enum Operator {
    Dense(CMatrix),
    LowRank {
        dim: usize,
        terms: Vec<(C64, CVector, CVector)>,
    },
}

impl Operator {
    pub fn zero(dim: usize) -> Self {
        Operator::LowRank {
            dim,
            terms: Vec::new(),
        }
    }

    /// `c |u⟩⟨v|`
    pub fn rank_one(c: C64, u: CVector, v: CVector) -> Self {
        Operator::LowRank {
            dim: u.len(),
            terms: vec![(c, u, v)],
        }
    }

    /// `c |u⟩⟨u|`
    pub fn projector(c: f64, u: &CVector) -> Self {
        Self::rank_one(C64::new(c, 0.0), u.clone(), u.clone())
    }

    pub fn dim(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::LowRank { dim, .. } => *dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Operator::Dense(m) => m.iter().all(|z| *z == ZERO),
            Operator::LowRank { terms, .. } => terms.iter().all(|(c, _, _)| *c == ZERO),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Operator::Dense(m) => m.clone(),
            Operator::LowRank { dim, terms } => {
                let mut out = CMatrix::zeros((*dim, *dim));
                for (c, u, v) in terms {
                    out.scaled_add(*c, &outer(u, v));
                }
                out
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Operator::Dense(m) => Operator::Dense(dagger(m)),
            Operator::LowRank { dim, terms } => Operator::LowRank {
                dim: *dim,
                terms: terms
                    .iter()
                    .map(|(c, u, v)| (c.conj(), v.clone(), u.clone()))
                    .collect(),
            },
        }
    }

    pub fn scaled(&self, a: C64) -> Self {
        match self {
            Operator::Dense(m) => Operator::Dense(m * a),
            Operator::LowRank { dim, terms } => Operator::LowRank {
                dim: *dim,
                terms: terms
                    .iter()
                    .map(|(c, u, v)| (*c * a, u.clone(), v.clone()))
                    .collect(),
            },
        }
    }

    /// Sum of two operators; stays low rank when both are.
    pub fn plus(&self, other: &Operator) -> Operator {
        match (self, other) {
            (Operator::LowRank { dim, terms: a }, Operator::LowRank { terms: b, .. }) => {
                let mut terms = a.clone();
                terms.extend(b.iter().cloned());
                Operator::LowRank { dim: *dim, terms }
            }
            _ => Operator::Dense(self.to_dense() + other.to_dense()),
        }
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Operator) -> Operator {
        match (self, other) {
            (Operator::LowRank { dim, terms: a }, Operator::LowRank { terms: b, .. }) => {
                let mut terms = Vec::with_capacity(a.len() * b.len());
                for (ca, ua, va) in a {
                    for (cb, ub, vb) in b {
                        let ov = inner(va, ub);
                        if ov != ZERO {
                            terms.push((*ca * *cb * ov, ua.clone(), vb.clone()));
                        }
                    }
                }
                Operator::LowRank { dim: *dim, terms }
            }
            (Operator::Dense(m), _) => Operator::Dense(other.right_mul(m)),
            (_, Operator::Dense(m)) => Operator::Dense(self.left_mul(m)),
        }
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        match self {
            Operator::Dense(m) => m.dot(x),
            Operator::LowRank { dim, terms } => {
                let mut out = CVector::zeros(*dim);
                for (c, u, v) in terms {
                    out.scaled_add(*c * inner(v, x), u);
                }
                out
            }
        }
    }

    /// `A · M`
    pub fn left_mul(&self, m: &CMatrix) -> CMatrix {
        match self {
            Operator::Dense(a) => a.dot(m),
            Operator::LowRank { dim, terms } => {
                let mut out = CMatrix::zeros((*dim, m.ncols()));
                for (c, u, v) in terms {
                    // row vector ⟨v|M
                    let vc = v.mapv(|z| z.conj());
                    let row = vc.dot(m);
                    add_outer(&mut out, *c, u, &row);
                }
                out
            }
        }
    }

    /// `M · A`
    pub fn right_mul(&self, m: &CMatrix) -> CMatrix {
        match self {
            Operator::Dense(a) => m.dot(a),
            Operator::LowRank { dim, terms } => {
                let mut out = CMatrix::zeros((m.nrows(), *dim));
                for (c, u, v) in terms {
                    let col = m.dot(u);
                    let vc = v.mapv(|z| z.conj());
                    add_outer(&mut out, *c, &col, &vc);
                }
                out
            }
        }
    }

    /// `A M A†`
    pub fn sandwich(&self, m: &CMatrix) -> CMatrix {
        match self {
            Operator::Dense(a) => a.dot(m).dot(&dagger(a)),
            Operator::LowRank { .. } => self.adjoint().right_mul(&self.left_mul(m)),
        }
    }
}

/// `out += c · |a⟩(b)ᵀ` where `b` already holds the row entries.
fn add_outer(out: &mut CMatrix, c: C64, a: &CVector, b: &CVector) {
    for (i, &ai) in a.iter().enumerate() {
        let s = c * ai;
        if s == ZERO {
            continue;
        }
        let mut row = out.row_mut(i);
        Zip::from(&mut row).and(b).for_each(|o, &bj| *o += s * bj);
    }
}
