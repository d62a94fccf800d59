use nctorus::qfield::{
    cf_expand, fixes, fixing_matrix, moebius_act, multiplier_ring, rank_value, LatticeElement,
    QuadIrr, Sl2Matrix,
};
use nctorus::Error;
use num_bigint::BigInt;
use proptest::prelude::*;

const RADICANDS: [i64; 9] = [2, 3, 5, 6, 7, 10, 11, 13, 17];

fn quad_irr() -> impl Strategy<Value = QuadIrr> {
    (
        -12i64..12,
        prop_oneof![-4i64..0, 1i64..5],
        prop_oneof![-9i64..0, 1i64..10],
        0usize..RADICANDS.len(),
    )
        .prop_map(|(p, q, r, i)| QuadIrr::new(p, q, r, RADICANDS[i]).unwrap())
}

/// Products of `T^k` and `S`.
fn sl2() -> impl Strategy<Value = Sl2Matrix> {
    prop::collection::vec(-3i64..4, 1..5).prop_map(|ks| {
        let s = Sl2Matrix::new(0, -1, 1, 0).unwrap();
        ks.into_iter().fold(Sl2Matrix::IDENTITY, |acc, k| {
            let t = Sl2Matrix::new(1, k, 0, 1).unwrap();
            acc.checked_mul(&t).unwrap().checked_mul(&s).unwrap()
        })
    })
}

fn abs(x: QuadIrr) -> QuadIrr {
    if x.signum() < 0 {
        -x
    } else {
        x
    }
}

#[test]
fn reference_fixing_matrices() {
    let cases = [
        (QuadIrr::new(1, 1, 2, 5).unwrap(), [[2, 1], [1, 1]]),
        (QuadIrr::sqrt(2).unwrap(), [[3, 4], [2, 3]]),
        (QuadIrr::new(-5, 1, 10, 5).unwrap(), [[-1, -1], [5, 4]]),
    ];
    for (theta, want) in cases {
        let g = fixing_matrix(&theta).unwrap();
        assert_eq!(g.rows(), want, "{theta}");
    }
}

#[test]
fn large_fundamental_unit_uses_fallback() {
    let theta = QuadIrr::sqrt(61).unwrap();
    let g = fixing_matrix(&theta).unwrap();
    assert!(fixes(&g, &theta));
    assert!(g.trace() > 100_000);
    assert!(g.c > 0);
}

#[test]
fn rational_inputs_are_rejected() {
    let t = QuadIrr::rational(3, 4).unwrap();
    assert!(fixing_matrix(&t).is_err());
    assert!(cf_expand(&t, 10).is_err());
}

#[test]
fn golden_ratio_expansion() {
    let cf = cf_expand(&QuadIrr::new(1, 1, 2, 5).unwrap(), 50).unwrap();
    assert_eq!(cf.period().unwrap(), &[BigInt::from(1)]);
    let conv = cf.convergents(6);
    let fib: Vec<(i64, i64)> = vec![(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)];
    for ((p, q), (fp, fq)) in conv.into_iter().zip(fib) {
        assert_eq!((p, q), (BigInt::from(fp), BigInt::from(fq)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moebius_action_composes(g in sl2(), h in sl2(), t in quad_irr()) {
        let gh = g.checked_mul(&h).unwrap();
        let lhs = moebius_act(&gh, &t).unwrap();
        let rhs = moebius_act(&g, &moebius_act(&h, &t).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(moebius_act(&Sl2Matrix::IDENTITY, &t).unwrap(), t);
    }

    #[test]
    fn fixing_matrix_is_verified(t in quad_irr()) {
        let g = match fixing_matrix(&t) {
            Ok(g) => g,
            Err(e) => {
                prop_assert!(matches!(e, Error::Overflow(_)), "{e}");
                return Ok(());
            }
        };
        let [[a, b], [c, d]] = g.rows();
        prop_assert_eq!(a as i128 * d as i128 - b as i128 * c as i128, 1);
        prop_assert!(c > 0);
        prop_assert!(g.trace() > 2);
        prop_assert!(t.mul_int(c).add_int(d).is_positive());
        prop_assert!(fixes(&g, &t));
    }

    #[test]
    fn rank_is_multiplicative(t in quad_irr(), m in 0u32..4, n in 0u32..4) {
        let g = fixing_matrix(&t);
        prop_assume!(g.as_ref().is_ok_and(|g| g.pow(m + n).is_ok()));
        let g = g.unwrap();
        let rm = rank_value(&g, m, &t).unwrap();
        let rn = rank_value(&g, n, &t).unwrap();
        prop_assert_eq!(rank_value(&g, m + n, &t).unwrap(), rm * rn);
    }

    #[test]
    fn rank_is_a_unit_of_the_multiplier_ring(t in quad_irr()) {
        let g = fixing_matrix(&t);
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        let ring = multiplier_ring(&t).unwrap();
        let lambda = rank_value(&g, 1, &t).unwrap();
        prop_assert!(ring.contains(&lambda));
        prop_assert!(ring.contains(&lambda.inv().unwrap()));
        prop_assert_eq!(lambda.norm(), QuadIrr::one());
    }

    #[test]
    fn multiplier_ring_is_closed(t in quad_irr(), a in -5i64..5, b in -5i64..5, x in -5i64..5, y in -5i64..5) {
        let ring = multiplier_ring(&t).unwrap();
        let fw = ring.maximal_order_generator().mul_int(ring.conductor.clone());
        let u = fw.mul_int(b).add_int(a);
        let v = fw.mul_int(y).add_int(x);
        prop_assert!(ring.contains(&u));
        prop_assert!(ring.contains(&v));
        prop_assert!(ring.contains(&(&u * &v)));
        prop_assert!(ring.contains(&(&u - &v)));
        // αΓ_θ ⊆ Γ_θ, checked by coordinates.
        let img = &u * &t;
        prop_assert!(LatticeElement::coordinates(&img, &t).is_some());
        if ring.conductor > BigInt::from(1) {
            prop_assert!(!ring.contains(&ring.maximal_order_generator()));
        }
    }

    #[test]
    fn convergents_approximate(t in quad_irr()) {
        let cf = cf_expand(&t, 200).unwrap();
        for (p, q) in cf.convergents(12) {
            let err = abs(&t - &QuadIrr::rational(p, q.clone()).unwrap());
            let bound = QuadIrr::rational(1, &q * &q).unwrap();
            prop_assert!(err < bound);
        }
    }

    #[test]
    fn expansion_is_eventually_periodic(t in quad_irr()) {
        let cf = cf_expand(&t, 500).unwrap();
        prop_assert!(cf.period().is_some_and(|p| !p.is_empty()));
    }
}
