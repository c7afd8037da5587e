//! Engine-level properties: determinism, substream isolation, stability and
//! transformation identities.

use pmt_core::catalog::{bind, solution, CaseKind, SamplingDomain, VerificationCase};
use pmt_core::expr::{param, t, u, v, x, Var};
use pmt_core::numjet::c;
use pmt_core::pde::ScalarUPde;
use pmt_core::transform::{iterate_point, Point, ScalarTransform};
use pmt_core::verify::{
    check_cyclic, check_solution_map, check_theorem_relation, run_suite, Grid, SamplingConfig,
    SuiteConfig, DEFAULT_CYCLIC_TOL, DEFAULT_TOL,
};
use pmt_core::{Catalog, Equation, Transform};
use proptest::prelude::*;

const INVERSE_TOL: f64 = 1e-12;
const GROUP_TOL: f64 = 1e-10;

fn subset(ids: &[&str], samples: usize) -> SuiteConfig {
    SuiteConfig {
        samples,
        cases: Some(ids.iter().map(|s| s.to_string()).collect()),
        ..SuiteConfig::default()
    }
}

#[test]
fn same_seed_same_bytes() {
    let cat = Catalog::new();
    let cfg = subset(&["T2.10", "T3.12", "HGEN", "S2"], 40);
    let a = run_suite(&cat, &cfg).unwrap().to_json();
    let b = run_suite(&cat, &cfg).unwrap().to_json();
    assert_eq!(a, b);
    let other = SuiteConfig {
        seed: cfg.seed + 1,
        ..cfg
    };
    assert_ne!(a, run_suite(&cat, &other).unwrap().to_json());
}

#[test]
fn worker_count_does_not_change_output() {
    let cat = Catalog::new();
    let base = subset(&["T2.18", "S3.7", "T4.4"], 30);
    let one = run_suite(
        &cat,
        &SuiteConfig {
            workers: Some(1),
            ..base.clone()
        },
    )
    .unwrap();
    let four = run_suite(
        &cat,
        &SuiteConfig {
            workers: Some(4),
            ..base
        },
    )
    .unwrap();
    assert_eq!(one.to_json(), four.to_json());
}

#[test]
fn adding_cases_leaves_other_samples_alone() {
    let cat = Catalog::new();
    let alone = run_suite(&cat, &subset(&["T2.13"], 25)).unwrap();
    let mixed = run_suite(&cat, &subset(&["T2.13", "H4", "T3.15"], 25)).unwrap();
    let pick = |r: &pmt_core::SuiteReport| {
        r.cases
            .iter()
            .filter(|c| c.case_id.starts_with("T2.13/"))
            .map(|c| serde_json::to_string(c).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(pick(&alone), pick(&mixed));
}

#[test]
fn doubling_samples_keeps_passes() {
    let cat = Catalog::new();
    let ids = ["T2.14", "T2.17", "T3.16", "I3.16v", "SCALE"];
    let small = run_suite(&cat, &subset(&ids, 50)).unwrap();
    let large = run_suite(&cat, &subset(&ids, 100)).unwrap();
    assert!(small.pass && large.pass);
    for (a, b) in small.cases.iter().zip(&large.cases) {
        assert_eq!(a.case_id, b.case_id);
        assert!(b.max_rel_residual <= b.tolerance);
    }
}

#[test]
fn unreachable_tolerance_fails_some_cases() {
    let cfg = SuiteConfig {
        tol: 1e-15,
        cyclic_tol: 1e-17,
        samples: 50,
        ..SuiteConfig::default()
    };
    let rep = run_suite(&Catalog::new(), &cfg).unwrap();
    assert!(!rep.pass);
    assert!(rep.cases.iter().any(|c| c.pass));
}

#[test]
fn json_uses_the_report_schema() {
    let rep = run_suite(&Catalog::new(), &subset(&["T2.10", "T3.15"], 5)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    let keys = |o: &serde_json::Value| {
        let mut k: Vec<_> = o.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(keys(&v), ["cases", "master_seed", "pass"]);
    assert!(v["master_seed"].is_u64() && v["pass"].is_boolean());
    for case in v["cases"].as_array().unwrap() {
        assert_eq!(
            keys(case),
            [
                "branch_warnings",
                "case_id",
                "failures",
                "max_abs_residual",
                "max_rel_residual",
                "params",
                "pass",
                "samples",
                "tolerance"
            ]
        );
        for (_, pair) in case["params"].as_object().unwrap() {
            assert_eq!(pair.as_array().unwrap().len(), 2);
        }
    }
    let back: pmt_core::SuiteReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back.to_json(), rep.to_json());
}

#[test]
fn declared_cycles_close_on_fifty_samples() {
    let cat = Catalog::new();
    let cfg = SamplingConfig {
        count: 50,
        ..SamplingConfig::default()
    };
    let mut seen = 0;
    for e in cat.entries() {
        for claim in e.cyclic_claims() {
            let case = e.instantiate(&claim.binding).unwrap();
            let r = check_cyclic(&case, claim.order, &cfg, DEFAULT_CYCLIC_TOL);
            assert!(r.pass, "{}", r.text_line());
            assert_eq!(r.branch_warnings, 0, "{}", r.text_line());
            seen += 1;
        }
    }
    // T2.10 ×2, T2.18s ×4, T3.12 ×3, T3.15
    assert_eq!(seen, 10);
}

#[test]
fn inverting_the_dependent_component_undoes_apply() {
    let cat = Catalog::new();
    let mut checked = 0;
    for e in cat.entries().iter().filter(|e| e.kind != CaseKind::System) {
        for b in e.all_bindings() {
            let case = e.instantiate(&b).unwrap();
            let Transform::Scalar(tr) = &case.transform else {
                unreachable!()
            };
            if !tr.w.contains_var(tr.dependent) || !tr.w.is_affine_in(tr.dependent) {
                continue;
            }
            for (x0, t0, w0) in [(1.1, 0.9, 1.4), (0.8, 1.7, 0.6), (1.5, 0.6, 1.9)] {
                let pt = match tr.dependent {
                    Var::V => Point::new(c(x0), c(t0), c(w0), c(w0)),
                    _ => Point::scalar(x0, t0, w0),
                };
                if case.transform.admits(&pt).is_err() {
                    continue;
                }
                let img = tr.apply(&pt).unwrap().value;
                let wp = if tr.dependent == Var::V { img.v } else { img.u };
                let back = tr.invert_dependent(c(x0), c(t0), wp).unwrap();
                assert!(
                    (back - c(w0)).norm() <= INVERSE_TOL * w0,
                    "{} {}",
                    case.id,
                    case.param_label()
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 100, "{checked}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_group_is_additive(
        e1 in -0.2..0.2f64, e2 in -0.2..0.2f64,
        x0 in 0.7..1.6f64, t0 in 0.5..2.0f64, u0 in 0.5..2.0f64, v0 in 0.5..2.0f64,
    ) {
        let cat = Catalog::new();
        let at = |e: f64| cat.instantiate_case("S3.7", &bind(&[("eps", c(e))])).unwrap().transform;
        let p = Point::new(c(x0), c(t0), c(u0), c(v0));
        let two = at(e1).apply(&p).and_then(|q| at(e2).apply(&q.value));
        let one = at(e1 + e2).apply(&p);
        if let (Ok(two), Ok(one)) = (two, one) {
            prop_assert!(two.value.rel_distance(&one.value) <= GROUP_TOL);
        }
    }
}

#[test]
fn time_translation_composes() {
    let cat = Catalog::new();
    let g = |e: f64| {
        cat.instantiate_case("G1", &bind(&[("eps", c(e)), ("mu", c(0.5)), ("n", c(2.0))]))
            .unwrap()
            .transform
    };
    let p = Point::scalar(1.2, 0.7, 1.1);
    let two = g(0.3)
        .apply(&g(0.4).apply(&p).unwrap().value)
        .unwrap()
        .value;
    assert!(two.rel_distance(&g(0.7).apply(&p).unwrap().value) < 1e-14);
    let back = iterate_point(&g(0.25), &p, 4).unwrap().value;
    assert!(back.rel_distance(&g(1.0).apply(&p).unwrap().value) < 1e-14);
}

fn identity_case() -> VerificationCase {
    let eq = Equation::ScalarU(ScalarUPde::with_drift(c(2.0), c(0.5), c(0.3)));
    VerificationCase {
        id: "identity".into(),
        params: Default::default(),
        kind: CaseKind::ScalarU,
        transform: Transform::Scalar(ScalarTransform::identity(Var::U)),
        unprimed: eq,
        primed: eq,
        domain: SamplingDomain::default(),
        cyclic_order: None,
        closed_form: None,
        anchor: "",
    }
}

#[test]
fn identity_relation_has_equal_sides() {
    let r =
        check_theorem_relation(&identity_case(), &SamplingConfig::default(), DEFAULT_TOL).unwrap();
    assert!(r.pass);
    assert!(r.max_rel_residual < 1e-15, "{}", r.max_rel_residual);
}

#[test]
fn identity_maps_a_solution_to_itself() {
    let s1 = solution("S1").unwrap();
    let mut case = identity_case();
    case.unprimed = s1.satisfies;
    case.primed = s1.satisfies;
    let r = check_solution_map(&case, &s1, &s1, &Grid::default(), 1e-12).unwrap();
    assert!(r.pass, "{}", r.text_line());
}

#[test]
fn translation_is_rejected_by_relation_precondition() {
    let tr = ScalarTransform::new(x() + u(), t(), u(), Var::U).unwrap();
    let mut case = identity_case();
    case.transform = Transform::Scalar(tr);
    assert!(check_theorem_relation(&case, &SamplingConfig::default(), DEFAULT_TOL).is_err());
    // a scalar u map may not mention v
    let mixed = ScalarTransform::new(x() * param("a"), t(), u() + v(), Var::U);
    assert!(mixed.is_err());
}
