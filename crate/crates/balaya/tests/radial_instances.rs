//! Radial instance behavior: sub-level search classifications and the
//! limiting-case thin sets.

use balaya::continuum::{radial_instance, RadialInstanceConfig};
use balaya::semilinear::{
    problem2_search, solve_fixed, thin_set_condition, verify_identity_suite, Classification,
};

#[test]
fn sub_level_search_finds_the_reduced_level() {
    // gamma > alpha but h > gamma - alpha: the full level is out of reach
    // and the search settles on a level near min(h, gamma - alpha)
    let cfg = RadialInstanceConfig {
        d: 1,
        alpha: 0.5,
        gamma: 1.2,
        h: 1.0,
    };
    let problem = radial_instance(&cfg, 256.0, 12).unwrap();
    let rep = problem2_search(&problem).unwrap();
    match rep.classification {
        Classification::SolvedProblem2 { ref g } => {
            let level = g.values()[0];
            // true threshold gamma - alpha = 0.7; the eta grid resolves to 0.5
            assert!(level > 0.0 && level < 1.0, "level {level}");
            assert!(level <= 0.7 + 1e-12, "level {level} exceeds the threshold");
        }
        ref other => panic!("expected a sub-level solution, got {other:?}"),
    }
    let u = rep.u.unwrap();
    assert!(u.values().min() >= 0.0);
}

#[test]
fn sub_level_search_full_level_when_solvable() {
    let cfg = RadialInstanceConfig {
        d: 1,
        alpha: 0.5,
        gamma: 2.0,
        h: 1.0,
    };
    let problem = radial_instance(&cfg, 256.0, 12).unwrap();
    let rep = problem2_search(&problem).unwrap();
    assert_eq!(rep.classification, Classification::SolvedProblem1);
}

#[test]
fn sub_level_search_reports_no_solution_when_gamma_below_alpha() {
    // gamma <= alpha: every level diverges
    let cfg = RadialInstanceConfig {
        d: 1,
        alpha: 0.5,
        gamma: 0.4,
        h: 1.0,
    };
    let problem = radial_instance(&cfg, 64.0, 10).unwrap();
    let rep = problem2_search(&problem).unwrap();
    assert_eq!(rep.classification, Classification::NoSolutionEvidence);
    assert!(rep.u.is_none());
}

#[test]
fn limiting_case_thin_set_splits_the_divergence() {
    // h = gamma - alpha exactly: K^phi(h) diverges while the thin-set
    // restriction K^{phi_{U \ A}}(eta h) stays finite
    let cfg = RadialInstanceConfig {
        d: 1,
        alpha: 0.5,
        gamma: 1.5,
        h: 1.0,
    };
    let problem = radial_instance(&cfg, 256.0, 12).unwrap();
    let rep = solve_fixed(&problem.kp, &problem.phi, &problem.h).unwrap();
    assert!(rep.residual < 1e-9);
    let ts = thin_set_condition(&problem, &rep.u, 0.5).unwrap();
    assert!(ts.restricted_bound_excess <= 1e-10);
    assert_eq!(ts.full_trend_divergent, Some(true), "K^phi(h) must diverge");
    assert_eq!(
        ts.restricted_trend_finite,
        Some(true),
        "the restricted level must stay finite"
    );
    // the thin set contains the far tail, where u falls below eta s
    assert!(ts.a.count() > 0);
}

#[test]
fn identity_suite_passes_on_a_solvable_radial_instance() {
    let cfg = RadialInstanceConfig {
        d: 1,
        alpha: 0.5,
        gamma: 2.0,
        h: 1.0,
    };
    let problem = radial_instance(&cfg, 64.0, 10).unwrap();
    let rep = verify_identity_suite(&problem).unwrap();
    assert!(rep.fixed_point_residual < 1e-9);
    assert!(rep.idempotence_residual < 1e-9);
    assert!(rep.equivalence_ok);
}
