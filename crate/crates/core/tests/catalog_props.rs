//! Catalog data against hand-coded residuals and algebraic identities.

use pmt_core::catalog::{bind, lambda_of_mu, scaling_parameter_map, solution, solutions};
use pmt_core::numjet::{c, ci, CScalar};
use pmt_core::pde::{
    complete_scalar, complete_system, FluxForm, PotentialSystem, ScalarJetPoint, ScalarUPde,
    ScalarVPde, SourceForm, SystemJetPoint, Weight,
};
use pmt_core::transform::Point;
use pmt_core::{Catalog, Equation, Error, Transform};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SOLUTION_TOL: f64 = 1e-11;
const LAMBDA_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-10;
const CROSS_TYPE_TOL: f64 = 1e-13;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_scalar_point(r: &mut ChaCha8Rng) -> ScalarJetPoint {
    ScalarJetPoint {
        x: c(r.random_range(0.7..1.6)),
        t: c(r.random_range(0.5..2.0)),
        w: c(r.random_range(0.5..2.0)),
        w_x: c(r.random_range(-2.0..2.0)),
        w_t: c(r.random_range(-2.0..2.0)),
        w_xx: c(r.random_range(-2.0..2.0)),
    }
}

fn random_system_point(r: &mut ChaCha8Rng) -> SystemJetPoint {
    SystemJetPoint {
        x: c(r.random_range(0.7..1.6)),
        t: c(r.random_range(0.5..2.0)),
        u: c(r.random_range(0.5..2.0)),
        u_x: c(r.random_range(-2.0..2.0)),
        u_t: c(r.random_range(-2.0..2.0)),
        v: c(r.random_range(0.5..2.0)),
        v_x: c(r.random_range(-2.0..2.0)),
        v_t: c(r.random_range(-2.0..2.0)),
    }
}

fn assert_close(a: CScalar, b: CScalar, what: &str) {
    assert!(
        (a - b).norm() <= 1e-13 * (1.0 + b.norm()),
        "{what}: {a} vs {b}"
    );
}

#[test]
fn porous_medium_family_matches_hand_residual() {
    let mut r = rng(1);
    for (n, mu) in [(2.0, 0.5), (-3.0, 3.0), (1.0, 7.0 / 3.0)] {
        let eq = ScalarUPde::porous_medium(c(n), c(mu));
        for _ in 0..5 {
            let p = random_scalar_point(&mut r);
            let (x, u, ux, uxx) = (p.x.re, p.w.re, p.w_x.re, p.w_xx.re);
            let hand = p.w_t.re
                - (n * u.powf(n - 1.0) * ux * ux + u.powf(n) * uxx + mu * u.powf(n) * ux / x);
            assert_close(eq.residual(&p).unwrap(), c(hand), "porous medium");
        }
    }
}

#[test]
fn boussinesq_matches_hand_residual() {
    let mut r = rng(2);
    for n in [-3.0, 1.0, 2.0] {
        let eq = ScalarUPde::boussinesq(c(n)).unwrap();
        for _ in 0..5 {
            let p = random_scalar_point(&mut r);
            let (u, ux, uxx) = (p.w.re, p.w_x.re, p.w_xx.re);
            let flux = u.powf(n) * uxx + n * u.powf(n - 1.0) * ux * ux;
            let hand = p.w_t.re - (flux + 2.0 * (n + 1.0) / n * u.powf(n) * ux);
            assert_close(eq.residual(&p).unwrap(), c(hand), "groundwater");
        }
    }
}

#[test]
fn potential_systems_match_hand_residuals() {
    let mut r = rng(3);
    for (n, mu) in [(-2.0, -0.5), (2.0, 2.5), (1.0, 7.0 / 3.0)] {
        let sys = PotentialSystem::porous_potential(c(n), c(mu)).unwrap();
        for _ in 0..5 {
            let p = random_system_point(&mut r);
            let (x, u, ux) = (p.x.re, p.u.re, p.u_x.re);
            let r1 = p.v_x.re - x * u;
            let r2 = p.v_t.re - (x * u.powf(n) * ux + (mu - 1.0) / (n + 1.0) * u.powf(n + 1.0));
            let (a, b) = sys.residuals(&p).unwrap();
            assert_close(a, c(r1), "potential v_x");
            assert_close(b, c(r2), "potential v_t");
        }
    }
    // ε-family target of the logarithmic potential map
    for eps in [1.0, -1.0, 0.5] {
        let sys = PotentialSystem::new(
            Weight::X,
            FluxForm::Power {
                a: c(eps),
                m: c(-1.0),
            },
            SourceForm::Const(c(2.0 * (eps - 1.0))),
        )
        .unwrap();
        for _ in 0..5 {
            let p = random_system_point(&mut r);
            let (x, u, ux) = (p.x.re, p.u.re, p.u_x.re);
            let (_, b) = sys.residuals(&p).unwrap();
            assert_close(
                b,
                c(p.v_t.re - (eps * x * ux / u + 2.0 * (eps - 1.0))),
                "ε system",
            );
        }
    }
    // λ₁, λ₂ target
    for n in [-3.0, 1.0, 2.0] {
        let l1 = n * n / (4.0 * (n + 1.0) * (n + 1.0));
        let l2 = -n / (2.0 * (n + 1.0) * (n + 1.0));
        let sys = PotentialSystem::new(
            Weight::X,
            FluxForm::Power {
                a: c(l1),
                m: c(-(n + 2.0)),
            },
            SourceForm::Power {
                b: c(l2),
                q: c(-(n + 1.0)),
            },
        )
        .unwrap();
        for _ in 0..5 {
            let p = random_system_point(&mut r);
            let (x, u, ux) = (p.x.re, p.u.re, p.u_x.re);
            let hand = p.v_t.re - (l1 * x * u.powf(-(n + 2.0)) * ux + l2 * u.powf(-(n + 1.0)));
            assert_close(sys.residuals(&p).unwrap().1, c(hand), "λ₁λ₂ system");
        }
    }
}

#[test]
fn integrated_form_matches_hand_residual() {
    let mut r = rng(4);
    let eq = ScalarVPde::new(c(1.0), c(-2.0), c(0.5), c(-1.0), c(0.0), Weight::X);
    for _ in 0..5 {
        let p = random_scalar_point(&mut r);
        let (x, vx, vxx) = (p.x.re, p.w_x.re, p.w_xx.re);
        let ratio = vx / x;
        let hand = p.w_t.re - (ratio.powi(-2) * vxx + 0.5 / ratio);
        assert_close(eq.residual(&p).unwrap(), c(hand), "integrated form");
    }
}

#[test]
fn heat_agrees_across_types() {
    let mut r = rng(5);
    let u_heat = ScalarUPde::new(c(0.0), c(1.0), c(0.0), c(0.0), c(0.0));
    let v_heat = ScalarVPde::heat();
    for _ in 0..50 {
        let p = random_scalar_point(&mut r);
        let a = u_heat.residual(&p).unwrap();
        let b = v_heat.residual(&p).unwrap();
        assert!((a - b).norm() <= CROSS_TYPE_TOL * (1.0 + b.norm()));
    }
}

#[test]
fn completion_zeroes_every_catalog_residual() {
    let cat = Catalog::new();
    let mut r = rng(6);
    for entry in cat.entries() {
        for b in entry.all_bindings() {
            let case = entry.instantiate(&b).unwrap();
            for eq in [&case.unprimed, &case.primed] {
                for _ in 0..5 {
                    match eq {
                        Equation::System(sys) => {
                            let p = complete_system(sys, &random_system_point(&mut r)).unwrap();
                            let (a, b) = sys.residuals(&p).unwrap();
                            assert_eq!((a, b), (c(0.0), c(0.0)), "{}", case.id);
                        }
                        _ => {
                            let mut raw = random_scalar_point(&mut r);
                            raw.w_x = c(raw.w_x.re.signum() * (0.5 + raw.w_x.re.abs()));
                            let p = complete_scalar(eq, &raw).unwrap();
                            assert_eq!(eq.scalar_residual(&p).unwrap(), c(0.0), "{}", case.id);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn solutions_satisfy_their_equations() {
    let mut r = rng(7);
    for sol in solutions() {
        for _ in 0..100 {
            let x: f64 = if sol.requires_positive_x {
                r.random_range(0.2..4.0)
            } else {
                r.random_range(-3.0..3.0)
            };
            let t = r.random_range(0.1..3.0);
            if sol.id == "S3" && x.abs() < 0.1 {
                continue;
            }
            let p = sol.eval(x, t).unwrap();
            let res = sol.satisfies.scalar_residual(&p).unwrap().norm();
            let scale = sol.satisfies.scalar_scale(&p).unwrap();
            assert!(
                res <= SOLUTION_TOL * scale.max(1.0),
                "{} at ({x}, {t}): {res}",
                sol.id
            );
        }
    }
}

#[test]
fn log_map_carries_s1_back_to_s2() {
    let case = Catalog::new()
        .instantiate_case("T2.13", &bind(&[("k", c(1.0))]))
        .unwrap();
    let Transform::Scalar(tr) = &case.transform else {
        panic!()
    };
    let (s1, s2) = (solution("S1").unwrap(), solution("S2").unwrap());
    for i in 0..10 {
        for j in 0..5 {
            let x = 1.2 + 1.8 * i as f64 / 9.0;
            let t = 0.5 + 1.5 * j as f64 / 4.0;
            let img = tr.apply(&Point::scalar(x, t, 1.0)).unwrap().value;
            let back = tr
                .invert_dependent(c(x), c(t), s1.value_at(img.x, img.t).unwrap())
                .unwrap();
            let want = s2.value_at(c(x), c(t)).unwrap();
            assert!((back - want).norm() <= CONSISTENCY_TOL * want.norm());
        }
    }
}

#[test]
fn stated_lambda_values() {
    for n in [-3.0, 1.0, 2.0, 5.0] {
        let n_c = c(n);
        let crit = (3.0 * n + 4.0) / (n + 2.0);
        assert!(lambda_of_mu(n_c, c(crit)).unwrap().norm() < 1e-14);
        assert!((lambda_of_mu(n_c, c(0.0)).unwrap() - c(crit)).norm() < 1e-14);
        let fixed = -(3.0 * n + 4.0) / n;
        assert!((lambda_of_mu(n_c, c(fixed)).unwrap() - c(fixed)).norm() < 1e-13);
    }
    match lambda_of_mu(c(1.0), c(-3.0)) {
        Err(Error::Constraint(m)) => assert!(m.contains("μ = −(n+2)/n")),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn lambda_map_is_an_involution(n in -4.0..4.0f64, mu in -6.0..6.0f64) {
        let den = n * mu + n + 2.0;
        prop_assume!(den.abs() > 0.2 && n.abs() > 0.1);
        let lam = lambda_of_mu(c(n), c(mu)).unwrap();
        prop_assume!((c(n) * lam + c(n) + c(2.0)).norm() > 0.2);
        let back = lambda_of_mu(c(n), lam).unwrap();
        prop_assert!((back - c(mu)).norm() <= LAMBDA_TOL * mu.abs().max(1.0));
    }

    #[test]
    fn scaling_map_inverts(
        c1 in 0.3..3.0f64, c3 in 0.3..3.0f64, c5 in 0.3..3.0f64,
        n in -3.0..3.0f64, kappa in 0.5..2.0f64, lam in -2.0..2.0f64,
        sigma in -1.0..1.0f64, tau in -1.0..1.0f64,
    ) {
        let pde = ScalarUPde::new(c(n), c(kappa), c(lam), c(sigma), c(tau));
        let there = scaling_parameter_map(c(c1), c(c3), c(c5), &pde).unwrap();
        let back = scaling_parameter_map(c(1.0 / c1), c(1.0 / c3), c(1.0 / c5), &there).unwrap();
        for (a, b) in [(back.kappa, pde.kappa), (back.lam, pde.lam), (back.sigma, pde.sigma), (back.tau, pde.tau)] {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }
}

#[test]
fn anchors_and_constraints_present() {
    let cat = Catalog::new();
    assert!(cat.entries().len() >= 24);
    for e in cat.entries() {
        assert!(!e.anchor.trim().is_empty(), "{}", e.id);
        assert!(!e.default_sweep().is_empty(), "{}", e.id);
    }
    let total: usize = cat.entries().iter().map(|e| e.all_bindings().len()).sum();
    assert!(total >= 60, "{total}");
}

#[test]
fn excluded_values_are_rejected() {
    let cat = Catalog::new();
    let rejected = [
        ("T2.17", bind(&[("n", c(-2.0)), ("C", c(1.0))])),
        ("T2.17", bind(&[("n", c(0.0)), ("C", c(1.0))])),
        ("T2.18", bind(&[("n", c(1.0)), ("mu", c(-3.0))])),
        ("T2.22", bind(&[("n", c(2.0)), ("mu", c(-2.0))])),
        ("T2.10", bind(&[("k", c(-1.0))])),
        ("T2.13", bind(&[("k", c(0.0))])),
        ("T3.16", bind(&[("n", c(-1.0))])),
        ("T4.3", bind(&[("c", c(0.0))])),
        ("T4.4", bind(&[("n", c(-2.0))])),
        ("T3.12", bind(&[("eps", c(0.0))])),
    ];
    for (id, p) in rejected {
        assert!(
            matches!(cat.instantiate_case(id, &p), Err(Error::Constraint(_))),
            "{id} {p:?}"
        );
    }
}

#[test]
fn guards_reject_singular_points() {
    let cat = Catalog::new();
    let s37 = cat
        .instantiate_case("S3.7", &bind(&[("eps", c(1.0))]))
        .unwrap();
    assert!(matches!(
        s37.transform
            .apply(&Point::new(c(1.0), c(1.0), c(1.0), c(1.02))),
        Err(Error::Domain(_))
    ));
    let t315 = cat.instantiate_case("T3.15", &bind(&[])).unwrap();
    assert!(t315
        .transform
        .apply(&Point::new(c(1.0), c(1.0), c(1.0), c(0.0)))
        .is_err());
}

#[test]
fn unit_imaginary_k_is_not_order_four() {
    // x' = x^(k+1) needs k + 1 = i for order 4; k = i gives (1+i)^4 = −4
    let cat = Catalog::new();
    let case = cat
        .instantiate_case("T2.10", &bind(&[("k", ci(0.0, 1.0))]))
        .unwrap();
    let p = Point::scalar(1.2, 1.0, 0.8);
    let four = pmt_core::transform::iterate_point(&case.transform, &p, 4)
        .unwrap()
        .value;
    assert!(four.rel_distance(&p) > 1e-2);
    let good = cat
        .instantiate_case("T2.10", &bind(&[("k", ci(-1.0, 1.0))]))
        .unwrap();
    assert_eq!(good.cyclic_order, Some(4));
}

#[test]
fn export_round_trips_expressions() {
    let cat = Catalog::new();
    let doc = cat.export().unwrap();
    let text = serde_json::to_string(&doc).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    for (entry, json) in cat
        .entries()
        .iter()
        .zip(back["entries"].as_array().unwrap())
    {
        assert_eq!(json["id"], entry.id);
        assert_eq!(json["anchor"], entry.anchor);
        let case = entry.instantiate(&entry.all_bindings()[0]).unwrap();
        for (name, e) in case.transform.components() {
            let parsed: pmt_core::Expr = json["transform"][name].as_str().unwrap().parse().unwrap();
            assert_eq!(&parsed, e, "{} {name}", entry.id);
        }
    }
    assert_eq!(back["solutions"].as_array().unwrap().len(), 3);
}
