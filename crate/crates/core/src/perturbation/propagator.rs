//! System propagators on the Landau–Zener sector `span{|w⟩, |w⊥⟩}`; the
//! Grover Hamiltonian vanishes on its complement, so `U` is the identity
//! there.

use crate::error::{Error, Result};
use crate::grover::{GroverProblem, Schedule};
use crate::quantum::{inner, unitary_propagator, CMatrix, CVector, C64};

pub(crate) type U2 = [[C64; 2]; 2];

const ID2: U2 = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
];

fn mul2(a: &U2, b: &U2) -> U2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn adjoint2(a: &U2) -> U2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// `exp(−iτH)` for real symmetric `H`.
pub(crate) fn exp2(h: [[f64; 2]; 2], tau: f64) -> U2 {
    let m = 0.5 * (h[0][0] + h[1][1]);
    let z = 0.5 * (h[0][0] - h[1][1]);
    let x = h[0][1];
    let r = z.hypot(x);
    let (s, c) = (tau * r).sin_cos();
    let k = if r > 0.0 { s / r } else { tau };
    let ph = C64::from_polar(1.0, -tau * m);
    let i = C64::new(0.0, 1.0);
    [
        [ph * (c - i * k * z), ph * (-i * k * x)],
        [ph * (-i * k * x), ph * (c + i * k * z)],
    ]
}

// fourth-order commutator-free Magnus: nodes 1/2 ∓ √3/6
pub(crate) const CF4_NODES: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
pub(crate) const CF4_A1: f64 = -0.038_675_134_594_812_87;
pub(crate) const CF4_A2: f64 = 0.538_675_134_594_812_9;

fn combine(a: [[f64; 2]; 2], wa: f64, b: [[f64; 2]; 2], wb: f64) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = wa * a[i][j] + wb * b[i][j];
        }
    }
    c
}

/// Unitary acting as a 2×2 block on `{|w⟩, |w⊥⟩}` and as the identity on
/// the orthogonal complement.
#[derive(Debug, Clone)]
pub(crate) struct LzUnitary {
    w: CVector,
    wp: CVector,
    pub(crate) u: U2,
}

impl LzUnitary {
    pub(crate) fn new(p: &GroverProblem, u: U2) -> Self {
        LzUnitary {
            w: p.marked_state(),
            wp: p.marked_complement(),
            u,
        }
    }

    fn act(&self, u: &U2, x: &CVector) -> CVector {
        let cw = inner(&self.w, x);
        let cp = inner(&self.wp, x);
        let nw = u[0][0] * cw + u[0][1] * cp - cw;
        let np = u[1][0] * cw + u[1][1] * cp - cp;
        let mut out = x.clone();
        out.scaled_add(nw, &self.w);
        out.scaled_add(np, &self.wp);
        out
    }

    pub(crate) fn apply(&self, x: &CVector) -> CVector {
        self.act(&self.u, x)
    }

    pub(crate) fn apply_adjoint(&self, x: &CVector) -> CVector {
        self.act(&adjoint2(&self.u), x)
    }

    pub(crate) fn to_dense(&self) -> CMatrix {
        let dim = self.w.len();
        let mut m = CMatrix::zeros((dim, dim));
        for j in 0..dim {
            let e = crate::quantum::basis_vector(dim, j);
            m.column_mut(j).assign(&self.apply(&e));
        }
        m
    }
}

/// `U(t) = |ψ₀(t)⟩e^{−iφ₀}⟨s| + |ψ₁(t)⟩e^{−iφ₁}⟨s⊥| + Σ|rest⟩⟨rest|` with
/// `φ_n(t) = ∫₀ᵗ E_n dt′` and `|s⊥⟩ = |ψ₁(0)⟩`.
#[derive(Debug, Clone)]
pub struct AdiabaticPropagator {
    pub t: f64,
    pub f: f64,
    pub phases: (f64, f64),
    /// Size of the dropped `O(1/√N)` correction.
    pub rest_correction: f64,
    pub(crate) block: LzUnitary,
}

impl AdiabaticPropagator {
    pub fn apply(&self, x: &CVector) -> CVector {
        self.block.apply(x)
    }

    pub fn apply_adjoint(&self, x: &CVector) -> CVector {
        self.block.apply_adjoint(x)
    }

    pub fn to_dense(&self) -> CMatrix {
        self.block.to_dense()
    }
}

/// Coordinates of `ψ₀(f)`, `ψ₁(f)` in the `{|w⟩, |w⊥⟩}` basis.
fn lz_states(p: &GroverProblem, f: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = p.mixing_angle(f).sin_cos();
    ([c, s], [-s, c])
}

fn adiabatic_block(p: &GroverProblem, f0: f64, f: f64, phi0: f64, phi1: f64) -> U2 {
    let (g, e) = lz_states(p, f);
    let (g0, e0) = lz_states(p, f0);
    let p0 = C64::from_polar(1.0, -phi0);
    let p1 = C64::from_polar(1.0, -phi1);
    let mut u = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            u[i][j] = p0 * g[i] * g0[j] + p1 * e[i] * e0[j];
        }
    }
    u
}

fn check_time(schedule: &Schedule, t: f64) -> Result<()> {
    let end = schedule.total_time;
    if !(t >= 0.0 && t <= end * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange { t, start: 0.0, end });
    }
    Ok(())
}

fn simpson_energies(p: &GroverProblem, schedule: &Schedule, a: f64, b: f64) -> Result<(f64, f64)> {
    let e =
        |t: f64| -> Result<(f64, f64)> { Ok(p.subspace_energies(schedule.f(t.min(schedule.total_time))?)) };
    let (ea, ma, eb) = (e(a)?, e(0.5 * (a + b))?, e(b)?);
    let h = (b - a) / 6.0;
    Ok((h * (ea.0 + 4.0 * ma.0 + eb.0), h * (ea.1 + 4.0 * ma.1 + eb.1)))
}

/// Dynamical phases `∫₀ᵗ E_n dt′` by Simpson's rule on the schedule grid.
fn dynamical_phases(p: &GroverProblem, schedule: &Schedule, t: f64) -> Result<(f64, f64)> {
    let mut acc = (0.0, 0.0);
    for w in schedule.times.windows(2) {
        if w[0] >= t {
            break;
        }
        let d = simpson_energies(p, schedule, w[0], w[1].min(t))?;
        acc.0 += d.0;
        acc.1 += d.1;
    }
    Ok(acc)
}

pub fn adiabatic_propagator(p: &GroverProblem, schedule: &Schedule, t: f64) -> Result<AdiabaticPropagator> {
    check_time(schedule, t)?;
    let t = t.min(schedule.total_time);
    let f = schedule.f(t)?;
    let f0 = schedule.f(0.0)?;
    let (phi0, phi1) = dynamical_phases(p, schedule, t)?;
    Ok(AdiabaticPropagator {
        t,
        f,
        phases: (phi0, phi1),
        rest_correction: 1.0 / p.size().sqrt(),
        block: LzUnitary::new(p, adiabatic_block(p, f0, f, phi0, phi1)),
    })
}

/// Exact time-ordered propagator from `t₀`, built from fourth-order
/// commutator-free Magnus steps on the 2×2 block.
#[derive(Debug, Clone)]
pub struct TimeOrderedPropagator {
    pub t0: f64,
    pub t: f64,
    pub max_step: f64,
    pub(crate) block: LzUnitary,
    problem: GroverProblem,
}

impl TimeOrderedPropagator {
    pub fn new(p: &GroverProblem, t0: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::param("max_step", "must be positive"));
        }
        Ok(TimeOrderedPropagator {
            t0,
            t: t0,
            max_step,
            block: LzUnitary::new(p, ID2),
            problem: *p,
        })
    }

    pub fn advance(&mut self, schedule: &Schedule, t: f64) -> Result<()> {
        check_time(schedule, t)?;
        if t < self.t {
            return Err(Error::param("t", "propagators only advance forward"));
        }
        let span = t - self.t;
        let steps = (span / self.max_step).ceil() as usize;
        let end = schedule.total_time;
        for k in 0..steps {
            let a = self.t + span * k as f64 / steps as f64;
            let h = span / steps as f64;
            let h1 = self
                .problem
                .subspace_hamiltonian(schedule.f((a + CF4_NODES[0] * h).min(end))?);
            let h2 = self
                .problem
                .subspace_hamiltonian(schedule.f((a + CF4_NODES[1] * h).min(end))?);
            let first = exp2(combine(h1, CF4_A2, h2, CF4_A1), h);
            let second = exp2(combine(h1, CF4_A1, h2, CF4_A2), h);
            self.block.u = mul2(&second, &mul2(&first, &self.block.u));
        }
        self.t = t;
        Ok(())
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        self.block.apply(x)
    }

    pub fn apply_adjoint(&self, x: &CVector) -> CVector {
        self.block.apply_adjoint(x)
    }

    pub fn to_dense(&self) -> CMatrix {
        self.block.to_dense()
    }
}

pub fn time_ordered_propagator(
    p: &GroverProblem,
    schedule: &Schedule,
    t: f64,
    max_step: f64,
) -> Result<TimeOrderedPropagator> {
    let mut u = TimeOrderedPropagator::new(p, 0.0, max_step)?;
    u.advance(schedule, t)?;
    Ok(u)
}

/// Interaction-picture frame stepped forward along a uniform grid.
pub(crate) trait Frame {
    fn advance(&mut self, t: f64) -> Result<()>;
    /// `U(t) x`
    fn forward(&self, x: &CVector) -> CVector;
    /// `U(t)† x`
    fn backward(&self, x: &CVector) -> CVector;
}

/// `U(t, t₀)` in the adiabatic approximation.
pub(crate) struct AdiabaticFrame<'a> {
    p: GroverProblem,
    schedule: &'a Schedule,
    f0: f64,
    t: f64,
    phases: (f64, f64),
    max_step: f64,
    block: LzUnitary,
}

impl<'a> AdiabaticFrame<'a> {
    pub(crate) fn new(p: &GroverProblem, schedule: &'a Schedule, t0: f64, max_step: f64) -> Result<Self> {
        check_time(schedule, t0)?;
        let t0 = t0.min(schedule.total_time);
        let f0 = schedule.f(t0)?;
        Ok(AdiabaticFrame {
            p: *p,
            schedule,
            f0,
            t: t0,
            phases: (0.0, 0.0),
            max_step,
            block: LzUnitary::new(p, adiabatic_block(p, f0, f0, 0.0, 0.0)),
        })
    }
}

impl Frame for AdiabaticFrame<'_> {
    fn advance(&mut self, t: f64) -> Result<()> {
        let t = t.min(self.schedule.total_time);
        let span = t - self.t;
        let steps = (span / self.max_step).ceil().max(1.0) as usize;
        for k in 0..steps {
            let a = self.t + span * k as f64 / steps as f64;
            let b = self.t + span * (k + 1) as f64 / steps as f64;
            let d = simpson_energies(&self.p, self.schedule, a, b)?;
            self.phases.0 += d.0;
            self.phases.1 += d.1;
        }
        self.t = t;
        let f = self.schedule.f(t)?;
        self.block.u = adiabatic_block(&self.p, self.f0, f, self.phases.0, self.phases.1);
        Ok(())
    }

    fn forward(&self, x: &CVector) -> CVector {
        self.block.apply(x)
    }

    fn backward(&self, x: &CVector) -> CVector {
        self.block.apply_adjoint(x)
    }
}

pub(crate) struct ExactFrame<'a> {
    schedule: &'a Schedule,
    prop: TimeOrderedPropagator,
}

impl<'a> ExactFrame<'a> {
    pub(crate) fn new(p: &GroverProblem, schedule: &'a Schedule, t0: f64, max_step: f64) -> Result<Self> {
        Ok(ExactFrame {
            schedule,
            prop: TimeOrderedPropagator::new(p, t0, max_step)?,
        })
    }
}

impl Frame for ExactFrame<'_> {
    fn advance(&mut self, t: f64) -> Result<()> {
        self.prop.advance(self.schedule, t.min(self.schedule.total_time))
    }

    fn forward(&self, x: &CVector) -> CVector {
        self.prop.apply(x)
    }

    fn backward(&self, x: &CVector) -> CVector {
        self.prop.apply_adjoint(x)
    }
}

/// Dense time-ordered frame for a general `H(f)` (used once the first-order
/// shift has been folded into the system Hamiltonian).
pub(crate) struct DenseFrame<'a> {
    schedule: &'a Schedule,
    hamiltonian: Box<dyn Fn(f64) -> Result<CMatrix> + 'a>,
    t: f64,
    max_step: f64,
    u: CMatrix,
}

impl<'a> DenseFrame<'a> {
    pub(crate) fn new(
        dim: usize,
        schedule: &'a Schedule,
        hamiltonian: Box<dyn Fn(f64) -> Result<CMatrix> + 'a>,
        t0: f64,
        max_step: f64,
    ) -> Self {
        DenseFrame {
            schedule,
            hamiltonian,
            t: t0,
            max_step,
            u: crate::quantum::identity(dim),
        }
    }
}

impl Frame for DenseFrame<'_> {
    fn advance(&mut self, t: f64) -> Result<()> {
        let end = self.schedule.total_time;
        let t = t.min(end);
        let span = t - self.t;
        let steps = (span / self.max_step).ceil() as usize;
        for k in 0..steps {
            let a = self.t + span * k as f64 / steps as f64;
            let h = span / steps as f64;
            let h1 = (self.hamiltonian)(self.schedule.f((a + CF4_NODES[0] * h).min(end))?)?;
            let h2 = (self.hamiltonian)(self.schedule.f((a + CF4_NODES[1] * h).min(end))?)?;
            let first = unitary_propagator(&(&h1 * C64::new(CF4_A2, 0.0) + &h2 * C64::new(CF4_A1, 0.0)), h);
            let second = unitary_propagator(&(&h1 * C64::new(CF4_A1, 0.0) + &h2 * C64::new(CF4_A2, 0.0)), h);
            self.u = second.dot(&first.dot(&self.u));
        }
        self.t = t;
        Ok(())
    }

    fn forward(&self, x: &CVector) -> CVector {
        self.u.dot(x)
    }

    fn backward(&self, x: &CVector) -> CVector {
        crate::quantum::dagger(&self.u).dot(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grover::{grover_hamiltonian, schedule_adaptive, schedule_constant};
    use crate::quantum::{dagger, identity, max_abs, vector_norm};

    #[test]
    fn starts_as_identity_on_lz_sector() {
        let p = GroverProblem::new(4, 1.0).unwrap();
        let s = schedule_adaptive(&p, 0.1).unwrap();
        let u = adiabatic_propagator(&p, &s, 0.0).unwrap();
        assert!(max_abs(&(u.to_dense() - identity(16))) < 1e-12);
        assert!(adiabatic_propagator(&p, &s, s.total_time * 1.01).is_err());
    }

    #[test]
    fn columns_orthonormal() {
        let p = GroverProblem::new(4, 1.0).unwrap();
        let s = schedule_adaptive(&p, 0.1).unwrap();
        for frac in [0.2, 0.5, 0.9] {
            let u = adiabatic_propagator(&p, &s, frac * s.total_time)
                .unwrap()
                .to_dense();
            assert!(max_abs(&(dagger(&u).dot(&u) - identity(16))) < 1e-8);
        }
    }

    #[test]
    fn reaches_marked_state() {
        let p = GroverProblem::new(6, 1.0).unwrap();
        let s = schedule_adaptive(&p, 0.05).unwrap();
        let u = adiabatic_propagator(&p, &s, s.total_time).unwrap();
        let out = u.apply(&p.uniform_state());
        assert!(inner(&p.marked_state(), &out).norm() >= 0.995);
    }

    #[test]
    fn adiabatic_close_to_time_ordered() {
        let p = GroverProblem::new(5, 1.0).unwrap();
        let eps = 0.05;
        let s = schedule_adaptive(&p, eps).unwrap();
        let a = adiabatic_propagator(&p, &s, s.total_time).unwrap();
        let e = time_ordered_propagator(&p, &s, s.total_time, 0.02).unwrap();
        let (_, e0) = p.instantaneous_states(1.0);
        for v in [p.uniform_state(), e0] {
            let fid = inner(&a.apply(&v), &e.apply(&v)).norm_sqr();
            assert!(fid >= 1.0 - 10.0 * eps * eps, "{fid}");
        }
    }

    #[test]
    fn cf4_converges_at_fourth_order() {
        let p = GroverProblem::new(3, 1.0).unwrap();
        let s = schedule_constant(&p, 5.0).unwrap();
        let reference = time_ordered_propagator(&p, &s, 5.0, 0.002).unwrap().to_dense();
        let e1 = max_abs(&(time_ordered_propagator(&p, &s, 5.0, 0.2).unwrap().to_dense() - &reference));
        let e2 = max_abs(&(time_ordered_propagator(&p, &s, 5.0, 0.1).unwrap().to_dense() - &reference));
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
        // dense CF4 on the full Hamiltonian agrees
        let mut frame = DenseFrame::new(
            8,
            &s,
            Box::new(|f| Ok(grover_hamiltonian(&p, f)?.into_matrix())),
            0.0,
            0.01,
        );
        frame.advance(5.0).unwrap();
        let v = p.uniform_state();
        assert!(vector_norm(&(frame.forward(&v) - reference.dot(&v))) < 1e-8);
    }

    #[test]
    fn geometric_connection_vanishes() {
        // real instantaneous states: ⟨ψ_n|∂_f ψ_n⟩ = 0
        let p = GroverProblem::new(5, 1.0).unwrap();
        for f in [0.1, 0.5, 0.8] {
            let h = 1e-6;
            let (g1, e1) = p.instantaneous_states(f + h);
            let (g0, e0) = p.instantaneous_states(f - h);
            let (g, e) = p.instantaneous_states(f);
            let dg = (&g1 - &g0) / C64::new(2.0 * h, 0.0);
            let de = (&e1 - &e0) / C64::new(2.0 * h, 0.0);
            assert!(inner(&g, &dg).norm() < 1e-8 && inner(&e, &de).norm() < 1e-8);
        }
    }

    #[test]
    fn sigma_z_matrix_element_peaks_at_crossing() {
        let n = 10;
        let p = GroverProblem::new(n, 1.0).unwrap();
        let mut best = (0.0, 0.0);
        for k in 0..=2000 {
            let f = k as f64 / 2000.0;
            let (g, e) = p.instantaneous_states(f);
            let m = inner(
                &g,
                &crate::quantum::apply_pauli(crate::quantum::Axis::Z, 3, n, &e).unwrap(),
            )
            .norm();
            if m > best.1 {
                best = (f, m);
            }
        }
        assert!((best.0 - 0.5).abs() <= 5.0 / p.size().sqrt(), "{best:?}");
    }
}
