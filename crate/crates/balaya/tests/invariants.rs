//! Structural invariants of the kernel calculus: semigroup laws, reduction
//! bounds, nested-set identities, monotone operator laws.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use balaya::gen;
use balaya::markov_core::{
    is_supermedian, poisson_apply, poisson_matrix, potential_kernel, PoissonSemigroupEval,
    StateFunction, SubMarkovKernel,
};
use balaya::potential_ops::{
    harmonic_kernel, killed_green, killed_kernel, reduced_function, SubsetMask,
};
use balaya::semilinear::{p_phi, solve_fixed, t_phi, thin_set_condition};
use rand::Rng;

/// proptest strategy: a substochastic kernel with row sums <= 0.9.
fn kernel_strategy(n: usize) -> impl Strategy<Value = SubMarkovKernel> {
    proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, n), n).prop_map(
        move |raw| {
            let rows: Vec<Vec<f64>> = raw
                .into_iter()
                .map(|row| {
                    let s: f64 = row.iter().sum::<f64>().max(1e-9);
                    let target = 0.9 * (s / (s + 1.0)); // in (0, 0.9)
                    row.into_iter().map(|v| v / s * target).collect()
                })
                .collect();
            SubMarkovKernel::from_rows(&rows).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn semigroup_law_holds(p in kernel_strategy(5), f in proptest::collection::vec(-2.0f64..2.0, 5)) {
        let sg = PoissonSemigroupEval::new(p);
        let f = StateFunction::from_slice(&f).unwrap();
        for (s, t) in [(0.1, 1.0), (1.0, 3.0), (0.1, 0.1)] {
            let both = poisson_apply(&sg, s + t, &f).unwrap();
            let inner = poisson_apply(&sg, t, &f).unwrap();
            let nested = poisson_apply(&sg, s, &inner).unwrap();
            prop_assert!((both.values() - nested.values()).amax() < 1e-10);
        }
    }

    #[test]
    fn poisson_matrix_stays_substochastic(p in kernel_strategy(5), t in 0.05f64..4.0) {
        let sg = PoissonSemigroupEval::new(p);
        let m = poisson_matrix(&sg, t).unwrap();
        for x in 0..5 {
            let row_sum: f64 = (0..5).map(|y| m[(x, y)]).sum();
            prop_assert!(row_sum <= 1.0 + 1e-12);
            prop_assert!((0..5).all(|y| m[(x, y)] >= -1e-15));
        }
    }

    #[test]
    fn reduction_is_positively_homogeneous(p in kernel_strategy(5), u in proptest::collection::vec(0.0f64..2.0, 5)) {
        let u = StateFunction::nonnegative_from_slice(&u).unwrap();
        let a = SubsetMask::from_indices(5, &[0, 2]).unwrap();
        let r1 = reduced_function(&p, &u, &a).unwrap();
        for c in [0.5, 2.0] {
            let scaled = StateFunction::nonnegative(u.values() * c).unwrap();
            let rc = reduced_function(&p, &scaled, &a).unwrap();
            prop_assert!((rc.values() - r1.values() * c).amax() < 1e-11);
        }
    }
}

#[test]
fn supermedian_functions_stay_semigroup_supermedian() {
    let mut rng = gen::rng_for(21);
    for _ in 0..40 {
        let n = rng.random_range(2..=7usize);
        let p = gen::substochastic(&mut rng, n, 0.9);
        let k = potential_kernel(&p).unwrap();
        let g = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let u = StateFunction::nonnegative(&k * g).unwrap();
        assert!(is_supermedian(&p, &u).unwrap());
        let sg = PoissonSemigroupEval::new(p);
        for t in [0.25, 1.0, 3.0] {
            let pu = poisson_apply(&sg, t, &u).unwrap();
            let slack = 1e-12 * u.sup_norm();
            for x in 0..n {
                assert!(pu.values()[x] <= u.values()[x] + slack);
            }
        }
    }
}

#[test]
fn resolvent_identity_two_sided() {
    let mut rng = gen::rng_for(31);
    for _ in 0..60 {
        let n = rng.random_range(2..=8usize);
        let p = gen::substochastic(&mut rng, n, 0.93);
        let k = potential_kernel(&p).unwrap();
        let eye = DMatrix::<f64>::identity(n, n);
        let left = &eye + p.matrix() * &k;
        let right = &eye + &k * p.matrix();
        assert!((&left - &k).amax() < 1e-12);
        assert!((&right - &k).amax() < 1e-12);
    }
}

#[test]
fn nested_set_and_minorant_identities() {
    let mut rng = gen::rng_for(41);
    for _ in 0..60 {
        let n = rng.random_range(3..=8usize);
        let p = gen::substochastic(&mut rng, n, 0.9);
        let u_set = gen::proper_subset(&mut rng, n);
        // V: random nonempty proper subset of U
        let u_idx = u_set.indices();
        if u_idx.len() < 2 {
            continue;
        }
        let v_set = SubsetMask::from_indices(n, &u_idx[..u_idx.len() / 2]).unwrap();
        let hu = harmonic_kernel(&p, &u_set).unwrap();
        let hv = harmonic_kernel(&p, &v_set).unwrap();
        // H_V H_U = H_U
        let composed = hv.matrix() * hu.matrix();
        assert!((&composed - hu.matrix()).amax() < 1e-11);
        // for x in V and y off U: H_U(x,y) >= H_V(x,y)
        for x in v_set.indices() {
            for y in u_set.complement().indices() {
                assert!(hu.entry(x, y) >= hv.entry(x, y) - 1e-12);
            }
        }
    }
}

#[test]
fn harmonic_kernel_reconciles_with_the_reduction() {
    // the defining identity: H_V p equals the smallest supermedian majorant
    // of p on the complement of V, for potentials p = Kν. The exit solve is
    // exact; the reduction sweep is the independent oracle.
    let mut rng = gen::rng_for(47);
    for _ in 0..60 {
        let n = rng.random_range(2..=8usize);
        let p = gen::substochastic(&mut rng, n, 0.9);
        let v = gen::proper_subset(&mut rng, n);
        let k = potential_kernel(&p).unwrap();
        let nu = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let pot = StateFunction::nonnegative(&k * nu).unwrap();

        let hv = harmonic_kernel(&p, &v).unwrap();
        let via_exit = hv.apply(pot.values());
        let via_reduction = reduced_function(&p, &pot, &v.complement()).unwrap();
        assert!(
            (&via_exit - via_reduction.values()).amax() < 1e-10,
            "H_V p and the reduction on the complement disagree"
        );
        // H_V w <= w for supermedian w, with equality off V
        for x in 0..n {
            assert!(via_exit[x] <= pot.values()[x] + 1e-12);
            if !v.contains(x) {
                assert!((via_exit[x] - pot.values()[x]).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn reduction_bounds_and_fixed_points() {
    let mut rng = gen::rng_for(51);
    for _ in 0..60 {
        let n = rng.random_range(2..=7usize);
        let p = gen::substochastic(&mut rng, n, 0.9);
        let u = gen::state_function(&mut rng, n, 0.0, 2.0);
        let a = gen::proper_subset(&mut rng, n);
        let b = a.union(&gen::proper_subset(&mut rng, n));
        let ra = reduced_function(&p, &u, &a).unwrap();
        let rb = reduced_function(&p, &u, &b).unwrap();
        for x in 0..n {
            assert!(ra.values()[x] >= -1e-15);
            assert!(ra.values()[x] <= rb.values()[x] + 1e-12, "monotone in the set");
        }
        // supermedian u is its own reduction on A, on A
        let k = potential_kernel(&p).unwrap();
        let g = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let s = StateFunction::nonnegative(&k * g).unwrap();
        let rs = reduced_function(&p, &s, &a).unwrap();
        for x in a.indices() {
            assert!((rs.values()[x] - s.values()[x]).abs() < 1e-11);
        }
    }
}

#[test]
fn killed_green_monotone_in_the_domain() {
    let mut rng = gen::rng_for(61);
    for _ in 0..60 {
        let n = rng.random_range(3..=8usize);
        let p = gen::substochastic(&mut rng, n, 0.9);
        let w = gen::proper_subset(&mut rng, n);
        let w_idx = w.indices();
        if w_idx.len() < 2 {
            continue;
        }
        let v = SubsetMask::from_indices(n, &w_idx[..w_idx.len() / 2]).unwrap();
        let gv = killed_green(&p, &v).unwrap();
        let gw = killed_green(&p, &w).unwrap();
        for x in 0..n {
            for y in 0..n {
                assert!(gv[(x, y)] <= gw[(x, y)] + 1e-12);
            }
        }
    }
}

#[test]
fn exhaustion_vanishing_is_exact_at_the_final_step() {
    let mut rng = gen::rng_for(71);
    for _ in 0..30 {
        let n = rng.random_range(2..=7usize);
        let p = gen::substochastic(&mut rng, n, 0.9);
        let k = potential_kernel(&p).unwrap();
        let f = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.5));
        let kf = &k * f;
        // V = X: the harmonic kernel has zero rows everywhere, exactly
        let h_full = harmonic_kernel(&p, &SubsetMask::full(n)).unwrap();
        let out = h_full.apply(&kf);
        assert_eq!(out.amax(), 0.0);
    }
}

#[test]
fn t_and_p_bounds_and_monotone_laws() {
    let mut rng = gen::rng_for(81);
    for _ in 0..25 {
        let problem = gen::problem(&mut rng, 7);
        let t = t_phi(&problem).unwrap();
        let p = p_phi(&problem).unwrap();
        // 0 <= T <= P <= h
        for x in 0..problem.n() {
            assert!(t.values()[x] >= -1e-14);
            assert!(t.values()[x] <= p.values()[x] + 1e-9);
            assert!(p.values()[x] <= problem.h.values()[x] + 1e-11);
        }
        // larger nonlinearity, smaller T and P
        let double = problem.with_phi(problem.phi.scaled(2.0).unwrap()).unwrap();
        let t2 = t_phi(&double).unwrap();
        let p2 = p_phi(&double).unwrap();
        assert!((t2.values() - t.values()).max() < 1e-11);
        assert!((p2.values() - p.values()).max() < 1e-9);
        // larger right-hand side, larger T
        let bigger = problem
            .with_h(StateFunction::nonnegative(problem.h.values() * 1.5).unwrap())
            .unwrap();
        let t3 = t_phi(&bigger).unwrap();
        assert!((t.values() - t3.values()).max() < 1e-11);
    }
}

#[test]
fn solvability_closure_produces_thin_sets() {
    // solution exists <=> P-phi h = h, and the thin-set construction passes
    // its bounds for every eta on solved instances
    let mut rng = gen::rng_for(91);
    for _ in 0..25 {
        let problem = gen::problem(&mut rng, 7);
        let rep = solve_fixed(&problem.kp, &problem.phi, &problem.h).unwrap();
        let p = p_phi(&problem).unwrap();
        let gap = (p.values() - problem.h.values()).amax();
        assert_eq!(rep.residual < 1e-10, gap < 1e-8);
        for eta in [0.25, 0.5, 0.9] {
            let ts = thin_set_condition(&problem, &rep.u, eta).unwrap();
            assert!(ts.restricted_bound_excess <= 1e-10);
            assert_eq!(ts.reduction_harmonic_part, 0.0);
        }
    }
}

#[test]
fn killed_kernel_spectral_radius_never_grows() {
    let mut rng = gen::rng_for(101);
    for _ in 0..40 {
        let n = rng.random_range(2..=8usize);
        let p = gen::substochastic(&mut rng, n, 0.95);
        let v = gen::proper_subset(&mut rng, n);
        let killed = killed_kernel(&p, &v).unwrap();
        use balaya::markov_core::spectral_radius_estimate;
        assert!(spectral_radius_estimate(&killed) <= spectral_radius_estimate(&p) + 1e-9);
    }
}
