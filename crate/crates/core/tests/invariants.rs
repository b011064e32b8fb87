use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zeno_core::bloch::{
    bloch_eigenvalues, bloch_matrix, closed_form_eigenvalues, entropy_production, BlochVariant,
};
use zeno_core::dynamics::{evolve, Drive, EvolveOptions, Generator, LindbladGenerator};
use zeno_core::grover::{dense_low_energies, gap, schedule_adaptive, GroverProblem};
use zeno_core::quantum::{
    dagger, frobenius_norm, identity, kron, partial_trace_right, random_density, random_hermitian, trace,
    unitary_propagator, C64,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lindblad_flow_is_trace_free_and_hermitian(seed in any::<u64>(), dim in 2usize..6, k in 0usize..3) {
        let mut r = rng(seed);
        let h = random_hermitian(dim, &mut r);
        let jumps: Vec<_> = (0..k).map(|_| random_hermitian(dim, &mut r).into_matrix()).collect();
        let gen = LindbladGenerator::from_dense(&h, &jumps).unwrap();
        let rho = random_density(dim, &mut r);
        let d = gen.rhs(0.0, 0.0, rho.matrix()).unwrap();
        prop_assert!(trace(&d).norm() < 1e-10);
        prop_assert!(frobenius_norm(&(&d - &dagger(&d))) < 1e-10);
    }

    #[test]
    fn propagators_are_unitary(seed in any::<u64>(), dim in 1usize..7, t in -5.0f64..5.0) {
        let h = random_hermitian(dim, &mut rng(seed));
        let u = unitary_propagator(h.matrix(), t);
        prop_assert!(frobenius_norm(&(dagger(&u).dot(&u) - identity(dim))) < 1e-10);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut r = rng(seed);
        let a = random_density(da, &mut r);
        let b = random_density(db, &mut r);
        let p = partial_trace_right(&kron(a.matrix(), b.matrix()), da, db).unwrap();
        prop_assert!(frobenius_norm(&(p - a.matrix())) < 1e-12);
    }

    #[test]
    fn entropy_production_is_non_negative(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let rho = random_density(dim, &mut r);
        let l = random_hermitian(dim, &mut r);
        prop_assert!(entropy_production(&rho, &l).unwrap() >= -1e-10);
    }

    #[test]
    fn dissipative_bloch_spectra_are_stable(ratio in -2.0f64..3.0, which in 0usize..3, skew in 0.1f64..10.0) {
        let g = 10f64.powf(ratio);
        let v = match which {
            0 => BlochVariant::DephasingZ { omega: 1.0, gamma: g },
            1 => BlochVariant::TwoProjectors { omega: 1.0, gamma1: g, gamma2: skew * g },
            _ => BlochVariant::Relaxation { omega: 1.0, sigma: g },
        };
        let m = bloch_matrix(v).unwrap();
        let num = bloch_eigenvalues(&m);
        prop_assert!(num.iter().all(|z| z.re <= 1e-12));
        let (a, b, c) = closed_form_eigenvalues(v);
        let sum: C64 = num.iter().sum();
        prop_assert!((sum - (a + b + c)).norm() < 1e-9 * (1.0 + g));
    }

    #[test]
    fn schedule_is_monotone(n in 2usize..12, eps in 0.02f64..1.0, u in 0.0f64..1.0) {
        let p = GroverProblem::new(n, 1.0).unwrap();
        let s = schedule_adaptive(&p, eps).unwrap();
        let t = u * s.total_time;
        let f = s.f(t).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(s.fdot(t).unwrap() <= 0.0);
        let later = s.f((t + 0.01 * s.total_time).min(s.total_time)).unwrap();
        prop_assert!(later <= f + 1e-14);
    }

    #[test]
    fn reduced_gap_tracks_eigensolve(n in 2usize..7, f in 0.0f64..1.0) {
        let p = GroverProblem::new(n, 1.0).unwrap();
        let (e0, e1) = dense_low_energies(&p, f).unwrap();
        let (s0, s1) = p.subspace_energies(f);
        prop_assert!((s0 - e0).abs() < 1e-10 && (s1 - e1).abs() < 1e-10);
        // the reduced matrix drops O(1/N) terms
        prop_assert!((gap(&p, f).unwrap() - (e1 - e0)).abs() < 5.0 / p.size());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_keeps_states_physical(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let h = random_hermitian(dim, &mut r);
        let jumps = vec![random_hermitian(dim, &mut r).into_matrix()];
        let gen = LindbladGenerator::from_dense(&h, &jumps).unwrap();
        let rho0 = random_density(dim, &mut r);
        let traj = evolve(&gen, &rho0, Drive::Fixed { f: 0.0, duration: 2.0 }, &EvolveOptions {
            records: 10,
            ..Default::default()
        })
        .unwrap();
        for rec in &traj.records {
            prop_assert!((rec.trace - 1.0).abs() < 1e-12);
            prop_assert!(rec.min_eig > -1e-9);
        }
        // Hermitian jumps are unital, so entropy never decreases
        prop_assert!(traj.max_entropy_drop() < 1e-8);
    }
}
