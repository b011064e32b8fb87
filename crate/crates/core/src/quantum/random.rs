use rand::Rng;
use rand_distr::StandardNormal;

use super::{dagger, hermitize, CMatrix, CVector, DensityMatrix, HermitianOperator, C64};

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_shape_fn((dim, dim), |_| {
        C64::new(standard_normal(rng), standard_normal(rng))
    })
}

/// GUE-distributed Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    HermitianOperator::new_unchecked(hermitize(&ginibre(dim, rng)))
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, rng);
    let dm = nalgebra::DMatrix::from_fn(dim, dim, |i, j| g[[i, j]]);
    let qr = dm.qr();
    let q = qr.q();
    let r = qr.r();
    CMatrix::from_shape_fn((dim, dim), |(i, j)| {
        let d = r[(j, j)];
        q[(i, j)] * (d / d.norm())
    })
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_shape_fn(dim, |_| C64::new(standard_normal(rng), standard_normal(rng)));
    let norm = super::vector_norm(&v);
    v / C64::new(norm, 0.0)
}

/// Full-rank random state `GG†/Tr(GG†)` (Hilbert–Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, rng);
    let m = g.dot(&dagger(&g));
    let tr = super::trace(&m).re;
    DensityMatrix::new_unchecked(hermitize(&(m / C64::new(tr, 0.0))))
}
