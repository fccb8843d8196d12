mod common;

use common::*;
use dqsync::dqlinalg::{project_udq, DQVector, HermitianDQMatrix};
use dqsync::dq::UDQ_TOL;
use dqsync::sync::{dqgpm, optimal_aligner, spectral_init, udq_distance, SyncProblem};
use dqsync::synthgen::{generate, NoiseLevel, TrialStreams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_entry_diff(a: &DQVector, b: &DQVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| {
        let d = *x - *y;
        d.st.norm().max(d.du.norm())
    }).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_scale_invariant_for_powers_of_two(seed in any::<u64>(), k in -20i32..20) {
        let mut r = rng(seed);
        let y = random_vec(r.random_range(1..12), &mut r);
        let a = 2f64.powi(k);
        prop_assert_eq!(project_udq(&y.scale(a)), project_udq(&y));
    }

    #[test]
    fn projection_scale_invariant(seed in any::<u64>(), a in 1e-6f64..1e6) {
        let mut r = rng(seed);
        let y = random_vec(r.random_range(1..12), &mut r);
        // Only the rounding of a·y itself separates the two sides.
        prop_assert!(max_entry_diff(&project_udq(&y.scale(a)), &project_udq(&y)) <= 1e-14);
    }

    #[test]
    fn projection_right_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let y = random_vec(r.random_range(1..12), &mut r);
        let z = random_udq(&mut r);
        let lhs = project_udq(&y.mul_right(&z));
        let rhs = project_udq(&y).mul_right(&z);
        prop_assert!(max_entry_diff(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn projection_contraction(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..12);
        let x = random_vec(n, &mut r);
        let y = random_vec(n, &mut r);
        let px = project_udq(&x);
        let lhs = project_udq(&x.add(&px).unwrap().add(&y).unwrap()).sub(&px).unwrap().norm2();
        prop_assert!(dn_le(lhs, y.norm2().scale(2.0)), "{lhs:?} vs {:?}", y.norm2());
    }

    #[test]
    fn distance_is_gauge_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..20);
        let x = random_feasible(n, &mut r);
        let xhat = random_feasible(n, &mut r);
        let g = random_udq(&mut r);
        let a = udq_distance(&x.mul_right(&g), &xhat);
        let b = udq_distance(&x, &xhat);
        prop_assert!(a.approx_eq(&b, 1e-10), "{a:?} {b:?}");
    }

    #[test]
    fn lipschitz_normalization(seed in any::<u64>()) {
        let mut r = rng(seed);
        let y = random_dq(&mut r);
        let z = random_udq(&mut r);
        let lhs = (y.normalize().unwrap().get() - z).magnitude();
        let rhs = (y - z).magnitude().scale(2.0);
        prop_assert!(dn_le(lhs, rhs));
    }

    #[test]
    fn alignment_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..30);
        let x = random_feasible(n, &mut r);
        let xhat = random_feasible(n, &mut r);
        let z = optimal_aligner(&x, &xhat).unwrap().get();
        let lhs = (xhat.inner(&x).unwrap() - z.scale(n as f64)).magnitude();
        let d = udq_distance(&x, &xhat);
        let rhs = (d * d).scale(0.5);
        prop_assert!((lhs.st - rhs.st).abs() <= 1e-8 && (lhs.du - rhs.du).abs() <= 1e-8, "{lhs:?} {rhs:?}");
    }
}

/// Replays the iteration so every iterate, not just the trace, can be checked.
fn iterates(c: &HermitianDQMatrix, x0: &DQVector, k: usize) -> Vec<DQVector> {
    let mut out = vec![x0.clone()];
    for _ in 0..k {
        let next = project_udq(&c.matvec(out.last().unwrap()).unwrap());
        out.push(next);
    }
    out
}

#[test]
fn iterates_stay_feasible_and_satisfy_alignment_identity() {
    for trial in 0..10 {
        let s = TrialStreams::new(3, trial);
        let inst = generate(40, 0.3, NoiseLevel::from_degrees(10.0, 0.1), &s);
        let problem = SyncProblem::new(inst.c.clone());
        let x0 = spectral_init(&problem, s.solver_seed()).unwrap();
        for x in iterates(&inst.c, &x0, 15) {
            assert!(x.is_feasible(UDQ_TOL));
            let z = optimal_aligner(&x, &inst.xhat).unwrap().get();
            let lhs = (inst.xhat.inner(&x).unwrap() - z.scale(40.0)).magnitude();
            let d = udq_distance(&x, &inst.xhat);
            let rhs = (d * d).scale(0.5);
            assert!(lhs.approx_eq(&rhs, 1e-8), "{lhs:?} {rhs:?}");
        }
    }
}

#[test]
fn terminal_distance_below_error_floor() {
    for trial in 0..20 {
        let s = TrialStreams::new(17, trial);
        let inst = generate(100, 0.3, NoiseLevel::from_degrees(10.0, 0.1), &s);
        let problem = SyncProblem::new(inst.c.clone());
        let x0 = spectral_init(&problem, s.solver_seed()).unwrap();
        let est = dqgpm(&problem, &x0, 100, 1e-8, Some(&inst.xhat)).unwrap();
        let terminal = est.trace.last().unwrap().0;
        let floor = 14.0 * inst.delta_xhat_norm.st / 100.0;
        assert!(terminal <= floor, "trial {trial}: {terminal} > {floor}");
    }
}

#[test]
fn noiseless_full_instance_is_fixed_point() {
    let s = TrialStreams::new(1, 0);
    let inst = generate(30, 1.0, NoiseLevel::ZERO, &s);
    let problem = SyncProblem::new(inst.c.clone());
    let x0 = spectral_init(&problem, s.solver_seed()).unwrap();
    let est = dqgpm(&problem, &x0, 100, 1e-8, Some(&inst.xhat)).unwrap();
    let (st, du) = *est.trace.last().unwrap();
    assert!(st <= 1e-8 && du.abs() <= 1e-8);
}
