use std::sync::Arc;

use nctorus::heis_module::{
    balanced_product, connection, rank, BalanceOptions, Generator, Level, ModuleElement,
};
use nctorus::heis_rep::GaussianAtom;
use nctorus::qfield::{QuadIrr, RmData, Sl2Matrix};
use nctorus::torus_alg::{Derivation, TorusElement};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn data() -> RmData {
    RmData::new(
        QuadIrr::new(-5, 1, 10, 5).unwrap(),
        Sl2Matrix::new(-1, -1, 5, 4).unwrap(),
    )
    .unwrap()
}

fn tau() -> Complex64 {
    c(0.3, 1.1)
}

/// A non-holomorphic element with several fibers and a polynomial factor.
fn generic(level: &Arc<Level>, shift: f64) -> ModuleElement {
    let a = GaussianAtom::new(vec![c(1.0, 0.2), c(0.3, -0.1)], c(0.1, 0.9), c(0.2, -0.1))
        .unwrap()
        .translate(shift);
    let b = GaussianAtom::gaussian(c(-0.2, 1.3), c(0.0, 0.4)).unwrap();
    ModuleElement::basis(level.clone(), a, 0)
        .add(&ModuleElement::basis(level.clone(), b, 2))
        .unwrap()
}

fn product(x: &ModuleElement, y: &ModuleElement) -> ModuleElement {
    balanced_product(x, y, &BalanceOptions::default()).unwrap().image
}

#[test]
fn balancing_over_the_generators() {
    let d = data();
    let l1 = Level::new(&d, 1).unwrap();
    let l2 = Level::new(&d, 2).unwrap();
    let xi = generic(&l1, 0.0);
    let eta = generic(&l2, 0.3);
    for g in [Generator::U, Generator::V, Generator::UInv, Generator::VInv] {
        let lhs = product(&xi.right_act(g), &eta);
        let rhs = product(&xi, &eta.left_act(g));
        let r = lhs.relative_diff(&rhs).unwrap();
        assert!(r < 1e-8, "{g:?}: {r}");
    }
}

#[test]
fn product_is_a_bimodule_map() {
    let d = data();
    let l1 = Level::new(&d, 1).unwrap();
    let xi = generic(&l1, 0.1);
    let eta = generic(&l1, -0.2);
    let base = product(&xi, &eta);
    for g in [Generator::U, Generator::V] {
        let r = product(&xi.left_act(g), &eta)
            .relative_diff(&base.left_act(g))
            .unwrap();
        assert!(r < 1e-8, "left {g:?}: {r}");
        let r = product(&xi, &eta.right_act(g))
            .relative_diff(&base.right_act(g))
            .unwrap();
        assert!(r < 1e-8, "right {g:?}: {r}");
    }
}

#[test]
fn holomorphic_product_closes() {
    let d = data();
    let l1 = Level::new(&d, 1).unwrap();
    let x = ModuleElement::holomorphic_basis(l1.clone(), tau(), 0).unwrap();
    let opts = BalanceOptions {
        tau: Some(tau()),
        ..Default::default()
    };
    let p = balanced_product(&x, &x, &opts).unwrap();
    assert_eq!(p.image.modulus(), 15);
    assert!(p.expansion.unwrap().residual < 1e-8);
}

#[test]
fn left_and_right_actions_commute() {
    let d = data();
    let l = Level::new(&d, 2).unwrap();
    let xi = generic(&l, 0.4);
    let gens = [Generator::U, Generator::V, Generator::UInv, Generator::VInv];
    for a in gens {
        for b in gens {
            let lhs = xi.right_act(b).left_act(a);
            let rhs = xi.left_act(a).right_act(b);
            assert!(lhs.relative_diff(&rhs).unwrap() < 1e-12, "{a:?} {b:?}");
        }
    }
}

#[test]
fn leibniz_rule_for_the_connection() {
    let d = data();
    let l = Level::new(&d, 1).unwrap();
    let xi = generic(&l, 0.0);
    let th = d.theta.clone();
    for (dir, der) in [(1u8, Derivation::D1), (2u8, Derivation::D2)] {
        for a in [TorusElement::u(th.clone()), TorusElement::v(th.clone())] {
            let lhs = connection(dir, &xi.right_mul(&a).unwrap()).unwrap().result;
            let rhs = connection(dir, &xi)
                .unwrap()
                .result
                .right_mul(&a)
                .unwrap()
                .add(&xi.right_mul(&a.derive(der)).unwrap())
                .unwrap();
            assert!(lhs.relative_diff(&rhs).unwrap() < 1e-12);
        }
    }
}

#[test]
fn curvature_commutes_with_actions() {
    let d = data();
    let l = Level::new(&d, 1).unwrap();
    let xi = generic(&l, 0.2);
    let curv = |x: &ModuleElement| {
        let a = connection(1, &connection(2, x).unwrap().result).unwrap().result;
        let b = connection(2, &connection(1, x).unwrap().result).unwrap().result;
        b.add(&a.scale(c(-1.0, 0.0))).unwrap()
    };
    for g in [Generator::U, Generator::V] {
        assert!(curv(&xi.right_act(g)).relative_diff(&curv(&xi).right_act(g)).unwrap() < 1e-12);
        assert!(curv(&xi.left_act(g)).relative_diff(&curv(&xi).left_act(g)).unwrap() < 1e-12);
    }
}

#[test]
fn rank_re_exposed() {
    let th = QuadIrr::new(1, 1, 2, 5).unwrap();
    let g = Sl2Matrix::new(2, 1, 1, 1).unwrap();
    assert_eq!(rank(&g, 0, &th).unwrap(), QuadIrr::one());
    assert_eq!(rank(&g, 1, &th).unwrap(), th.add_int(1));
    assert_eq!(rank(&g, 2, &th).unwrap(), th.mul_int(3).add_int(2));
}

#[test]
fn json_shape() {
    let d = data();
    let l = Level::new(&d, 1).unwrap();
    let x = ModuleElement::holomorphic_basis(l, tau(), 2).unwrap();
    let v: serde_json::Value = serde_json::to_value(&x).unwrap();
    assert_eq!(v["degree"], 1);
    assert_eq!(v["terms"].as_array().unwrap().len(), 1);
    assert_eq!(v["terms"][0]["finite"].as_array().unwrap().len(), 5);
    assert_eq!(v["data"]["g"], serde_json::json!([[-1, -1], [5, 4]]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bilinear(s in -2.0f64..2.0, t in -2.0f64..2.0, u in -1.0f64..1.0, shift in -0.5f64..0.5) {
        let d = data();
        let l1 = Level::new(&d, 1).unwrap();
        let x1 = generic(&l1, shift);
        let x2 = ModuleElement::holomorphic_basis(l1.clone(), tau(), 3).unwrap();
        let y = generic(&l1, -shift);
        let a = c(s, u);
        let b = c(t, -u);
        let combo = x1.scale(a).add(&x2.scale(b)).unwrap();
        let lhs = product(&combo, &y);
        let rhs = product(&x1, &y).scale(a).add(&product(&x2, &y).scale(b)).unwrap();
        prop_assert!(lhs.relative_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn bimodule_axiom(n1 in -2i64..3, m1 in -2i64..3, n2 in -2i64..3, m2 in -2i64..3) {
        let d = data();
        let l = Level::new(&d, 1).unwrap();
        let xi = generic(&l, 0.25);
        let th = d.theta.clone();
        let a = TorusElement::monomial(th.clone(), n1, m1, c(1.0, 0.0));
        let b = TorusElement::monomial(th, n2, m2, c(1.0, 0.0));
        let lhs = xi.left_mul(&a).unwrap().right_mul(&b).unwrap();
        let rhs = xi.right_mul(&b).unwrap().left_mul(&a).unwrap();
        prop_assert!(lhs.relative_diff(&rhs).unwrap() < 1e-12);
        // module structure: ξ·(ab) = (ξ·a)·b
        let ab = a.multiply(&b).unwrap();
        let r1 = xi.right_mul(&ab).unwrap();
        let r2 = xi.right_mul(&a).unwrap().right_mul(&b).unwrap();
        prop_assert!(r1.relative_diff(&r2).unwrap() < 1e-12);
        let l1 = xi.left_mul(&ab).unwrap();
        let l2 = xi.left_mul(&b).unwrap().left_mul(&a).unwrap();
        prop_assert!(l1.relative_diff(&l2).unwrap() < 1e-12);
    }
}
