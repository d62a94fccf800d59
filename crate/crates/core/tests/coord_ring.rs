use nctorus::coord_ring::{piece_dim, CoordinateRing, RingElement, RingOptions, Verdict};
use nctorus::qfield::{QuadIrr, RmData, Sl2Matrix};
use num_complex::Complex64;
use num_integer::gcd;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data() -> RmData {
    RmData::new(
        QuadIrr::new(-5, 1, 10, 5).unwrap(),
        Sl2Matrix::new(-1, -1, 5, 4).unwrap(),
    )
    .unwrap()
}

fn tau() -> Complex64 {
    Complex64::new(0.3, 1.1)
}

fn ring(d: RmData) -> CoordinateRing {
    let opts = RingOptions {
        theta_diagnostic: vec![],
        ..Default::default()
    };
    CoordinateRing::new(d, tau(), opts).unwrap()
}

#[test]
fn dimensions_follow_matrix_powers() {
    let d = data();
    let dims: Vec<usize> = (0..=3).map(|n| piece_dim(n, &d).unwrap()).collect();
    assert_eq!(dims, vec![1, 5, 15, 40]);
    let golden = RmData::from_theta(QuadIrr::new(1, 1, 2, 5).unwrap()).unwrap();
    let dims: Vec<usize> = (0..=4).map(|n| piece_dim(n, &golden).unwrap()).collect();
    assert_eq!(dims, vec![1, 1, 3, 8, 21]);
}

#[test]
fn shift_equivariance_of_structure_tensors() {
    let r = ring(data());
    for (m, n) in [(1u32, 1u32), (1, 2), (2, 1)] {
        let t = r.structure_tensor(m, n).unwrap();
        let [c3, c1, c2] = t.shape;
        let a2 = r.data().g.pow(n).unwrap().a;
        let g = gcd(c1, c3);
        let di = c1 / g;
        let dk = c3 / g;
        let dj = (dk as i64 - a2 * di as i64).rem_euclid(c2 as i64) as usize;
        let scale = t.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for k in 0..c3 {
            for i in 0..c1 {
                for j in 0..c2 {
                    let a = t.get(k, i, j);
                    let b = t.get((k + dk) % c3, (i + di) % c1, (j + dj) % c2);
                    worst = worst.max((a - b).norm());
                }
            }
        }
        assert!(worst / scale < 1e-8, "({m},{n}): {worst}");
    }
}

#[test]
fn tensor_contraction_matches_mult() {
    let r = ring(data());
    let t = r.structure_tensor(1, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let u = r.random_element(1, &mut rng).unwrap();
        let v = r.random_element(1, &mut rng).unwrap();
        let (w, _) = r.mult(&u, &v).unwrap();
        let want = t.contract(u.piece(1).unwrap(), v.piece(1).unwrap());
        let got = w.piece(2).unwrap();
        let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff / scale < 1e-10, "{diff}");
    }
}

#[test]
fn generation_and_quadraticity_at_desk_scale() {
    let r = ring(data());
    let g = r.check_generation(3).unwrap();
    assert!(g.generated);
    assert_eq!(g.steps[0].rank, Some(15));
    assert_eq!(g.steps[1].rank, Some(40));
    let q = r.check_quadratic().unwrap();
    assert_eq!(q.kernel_dim, Some(10));
    assert_eq!(q.degree3_kernel_dim, Some(125 - 40));
    assert_eq!(q.relation_span, Some(85));
    assert_eq!(q.verdict, Verdict::Pass);
}

#[test]
fn generation_for_other_matrices_meeting_the_bound() {
    // g = [[-1,-1],[6,5]] fixes (−3+√3)/6 and has c = 6 ≥ a+d = 4.
    let g = Sl2Matrix::new(-1, -1, 6, 5).unwrap();
    let theta = QuadIrr::new(-3, 1, 6, 3).unwrap();
    let d = RmData::new(theta, g).unwrap();
    let r = ring(d);
    let gen = r.check_generation(2).unwrap();
    assert!(gen.generated);
}

#[test]
fn associativity_on_random_triples() {
    let r = ring(data());
    let res = r.assoc_residual(5, 7).unwrap();
    assert!(res < 1e-8, "{res}");
    let golden = ring(RmData::from_theta(QuadIrr::new(1, 1, 2, 5).unwrap()).unwrap());
    assert!(golden.assoc_residual(5, 7).unwrap() < 1e-8);
}

#[test]
fn unit_is_two_sided() {
    let r = ring(data());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = r.random_element(2, &mut rng).unwrap();
    assert_eq!(r.mult(&RingElement::one(), &u).unwrap().0, u);
    assert_eq!(r.mult(&u, &RingElement::one()).unwrap().0, u);
}

#[test]
fn rejects_real_tau() {
    assert!(CoordinateRing::new(data(), Complex64::new(1.0, 0.0), RingOptions::default()).is_err());
}
