use nalgebra::DMatrix;
use phi_debruijn::densities::{Density, PdeSpec};
use phi_debruijn::functionals::EntropicFunctional;
use phi_debruijn::identities::{
    check_identity, named_suite, run_suite, Check, IdentitySpec, Status,
};
use phi_debruijn::report::{parse_config, run, to_json};

#[test]
fn heat_trace_of_size_one_equals_scalar_heat() {
    for f in [
        EntropicFunctional::shannon(),
        EntropicFunctional::with_param("hcdt", 2.0).unwrap(),
    ] {
        for theta in [0.5, 1.0, 2.0] {
            let p = Density::gaussian_1d();
            let scalar = check_identity(&IdentitySpec::entropy(p.clone(), f.clone(), theta));
            let trace = check_identity(&IdentitySpec::entropy(p, f.clone(), theta).with_pde(
                PdeSpec::HeatTrace {
                    r: DMatrix::identity(1, 1),
                },
            ));
            assert!(scalar.pass && trace.pass);
            let (a, b) = (scalar.rhs_scalar().unwrap(), trace.rhs_scalar().unwrap());
            assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
        }
    }
}

#[test]
fn signs_follow_the_pde_order() {
    let sh = EntropicFunctional::shannon;
    // heat: entropy grows, divergence to the reference shrinks
    let h = check_identity(&IdentitySpec::entropy(Density::gaussian_1d(), sh(), 1.0));
    assert!(h.lhs_scalar().unwrap() > 0.0);
    let d = check_identity(&IdentitySpec::divergence(
        Density::gaussian_1d().with_offset(1.0).unwrap(),
        Density::gaussian_1d(),
        sh(),
        1.0,
    ));
    assert!(d.lhs_scalar().unwrap() < 0.0);
    // second-order families: H″ = −J(·) < 0 on both sides
    for p in [Density::cauchy_1d(), Density::levy(0.0).unwrap()] {
        let r = check_identity(&IdentitySpec::entropy(p, sh(), 1.0));
        assert!(r.pass);
        assert!(r.lhs_scalar().unwrap() < 0.0 && r.rhs_scalar().unwrap() < 0.0);
    }
}

#[test]
fn error_budgets_stay_below_a_tenth_of_tolerance() {
    for name in [
        "gaussian_scalar",
        "gaussian_multivariate",
        "cauchy",
        "levy",
        "guo",
    ] {
        let out = run_suite(name, &named_suite(name, &[0.5, 1.0, 2.0]).unwrap());
        for r in &out.results {
            assert_eq!(
                r.status,
                Status::Passed,
                "{}: {:?}",
                r.check_id,
                r.diagnostics
            );
            let v = &r.diagnostics.values;
            for key in ["budget_fd", "budget_quadrature"] {
                if let Some(b) = v.get(key) {
                    assert!(
                        *b <= r.tolerance.rel / 10.0,
                        "{} {key} = {b:e} > {:e}",
                        r.check_id,
                        r.tolerance.rel / 10.0
                    );
                }
            }
        }
    }
}

#[test]
fn mismatched_pde_is_gated_before_evaluation() {
    let r = check_identity(
        &IdentitySpec::entropy(Density::gaussian_1d(), EntropicFunctional::shannon(), 1.0)
            .with_pde(PdeSpec::laplace()),
    );
    assert_eq!(r.status, Status::Errored);
    assert!(r.lhs.is_none() && r.rhs.is_none());
    assert!(r.diagnostics.pde_residual_max.unwrap() > 1e-8);
}

#[test]
fn reports_are_deterministic_apart_from_timestamp() {
    let cfg = parse_config(r#"{"suites":["cauchy","appendix_bounds"],"seed":11}"#).unwrap();
    let strip = |mut r: phi_debruijn::report::Report| {
        r.timestamp = None;
        to_json(&r).unwrap()
    };
    assert_eq!(strip(run(&cfg).unwrap()), strip(run(&cfg).unwrap()));
}

#[test]
fn seeded_jitter_moves_grids_but_keeps_bounds() {
    let mut checks = named_suite("appendix_bounds", &[1.0]).unwrap();
    let plain = run_suite("b", &checks);
    checks.iter_mut().for_each(|c| c.seed(3));
    let jittered = run_suite("b", &checks);
    assert!(jittered.results.iter().all(|r| r.pass));
    let moved = plain
        .results
        .iter()
        .zip(&jittered.results)
        .filter(|(a, b)| a.kind.starts_with("property:bound") && a.lhs != b.lhs)
        .count();
    assert!(moved > 0);
    assert!(checks.iter().any(|c| matches!(c, Check::Property(_))));
}
