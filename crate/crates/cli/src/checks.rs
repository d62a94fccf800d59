//! Batch property checks behind `algebra` and `module-check`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nctorus::heis_module::{connection, curvature, Generator, Level, ModuleElement};
use nctorus::heis_rep::{
    act_finite, act_real, group_mul, lie_combination, FiniteHeis, FiniteVector, HeisElement,
    RealHeis, SchwartzVector,
};
use nctorus::qfield::{QuadIrr, RmData};
use nctorus::torus_alg::{e, Derivation, TorusElement};
use nctorus::{Precision, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Residuals = BTreeMap<&'static str, f64>;

const SAMPLES: [f64; 7] = [-1.7, -0.9, -0.3, 0.0, 0.4, 1.1, 2.3];

fn bump(map: &mut Residuals, key: &'static str, v: f64) {
    let slot = map.entry(key).or_insert(0.0);
    *slot = slot.max(v);
}

fn random_element(theta: &QuadIrr, precision: Precision, rng: &mut ChaCha8Rng) -> TorusElement {
    let len = rng.random_range(1..=20);
    let terms: Vec<_> = (0..len)
        .map(|_| {
            (
                (rng.random_range(-6..=6), rng.random_range(-6..=6)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    TorusElement::from_terms(theta.clone(), terms).with_precision(precision)
}

/// Associativity, trace, positivity, star and Leibniz residuals on `count`
/// consecutive triples of random elements of support at most 20.
pub fn algebra_suite(
    theta: &QuadIrr,
    precision: Precision,
    tau: Complex64,
    count: usize,
    seed: u64,
) -> Result<Residuals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<TorusElement> = (0..count + 2)
        .map(|_| random_element(theta, precision, &mut rng))
        .collect();
    let mut out = Residuals::new();
    for w in xs.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let ab = a.multiply(b)?;
        bump(
            &mut out,
            "associativity",
            ab.multiply(c)?.max_abs_diff(&a.multiply(&b.multiply(c)?)?),
        );
        bump(
            &mut out,
            "trace",
            (ab.trace() - b.multiply(a)?.trace()).norm(),
        );
        let t = a.star().multiply(a)?.trace();
        let parseval: f64 = a.terms().map(|(_, z)| z.norm_sqr()).sum();
        let pos = if t.re < 0.0 {
            f64::INFINITY
        } else {
            (t - parseval).norm()
        };
        bump(&mut out, "positivity", pos);
        bump(
            &mut out,
            "star",
            ab.star().max_abs_diff(&b.star().multiply(&a.star())?),
        );
        bump(&mut out, "star_involution", a.star().star().max_abs_diff(a));
        for d in [Derivation::D1, Derivation::D2, Derivation::Tau(tau)] {
            let rhs = a.derive(d).multiply(b)?.add(&a.multiply(&b.derive(d))?)?;
            bump(&mut out, "leibniz", ab.derive(d).max_abs_diff(&rhs));
        }
    }
    Ok(out)
}

/// `f_τ` on the first fiber and a translated, polynomially weighted copy on
/// the last one.
fn sample(level: &Arc<Level>, tau: Complex64) -> Result<ModuleElement> {
    let f = level.holomorphic_vector(tau)?;
    let g = f
        .translate(0.3)
        .mul_poly(&[Complex64::new(1.0, 0.0), Complex64::new(0.2, -0.4)]);
    ModuleElement::basis(level.clone(), f, 0).add(&ModuleElement::basis(
        level.clone(),
        g,
        level.modulus() - 1,
    ))
}

fn sup_over_samples(f: &SchwartzVector) -> f64 {
    SAMPLES
        .iter()
        .map(|&x| f.eval(x).norm())
        .fold(0.0, f64::max)
}

fn module_checks(
    d: &RmData,
    level: &Arc<Level>,
    tau: Complex64,
    out: &mut Residuals,
) -> Result<()> {
    let xi = sample(level, tau)?;
    let q = e(d.theta.to_f64());
    let gens = [Generator::U, Generator::V, Generator::UInv, Generator::VInv];

    let r = xi.right_act(Generator::U).right_act(Generator::V);
    let r2 = xi.right_act(Generator::V).right_act(Generator::U).scale(q);
    bump(out, "right_relation", r.relative_diff(&r2)?);
    let l = xi.left_act(Generator::V).left_act(Generator::U);
    let l2 = xi.left_act(Generator::U).left_act(Generator::V).scale(q);
    bump(out, "left_relation", l.relative_diff(&l2)?);
    for a in gens {
        for b in gens {
            let x = xi.right_act(b).left_act(a);
            let y = xi.left_act(a).right_act(b);
            bump(out, "actions_commute", x.relative_diff(&y)?);
        }
    }
    for (g, h) in [
        (Generator::U, Generator::UInv),
        (Generator::V, Generator::VInv),
    ] {
        bump(
            out,
            "inverses",
            xi.right_act(g).right_act(h).relative_diff(&xi)?,
        );
        bump(
            out,
            "inverses",
            xi.left_act(g).left_act(h).relative_diff(&xi)?,
        );
    }

    for (dir, der) in [(1u8, Derivation::D1), (2u8, Derivation::D2)] {
        for (n, m) in [(1, 0), (0, 1), (2, -1)] {
            let a = TorusElement::monomial(d.theta.clone(), n, m, Complex64::new(1.0, 0.0));
            let lhs = connection(dir, &xi.right_mul(&a)?)?.result;
            let rhs = connection(dir, &xi)?
                .result
                .right_mul(&a)?
                .add(&xi.right_mul(&a.derive(der))?)?;
            bump(out, "leibniz", lhs.relative_diff(&rhs)?);
        }
    }
    let a = connection(1, &connection(2, &xi)?.result)?.result;
    let b = connection(2, &connection(1, &xi)?.result)?.result;
    let comm = a.add(&b.scale(Complex64::new(-1.0, 0.0)))?;
    bump(
        out,
        "curvature",
        comm.relative_diff(&xi.scale(curvature(level)))?,
    );

    let eps = level.eps_f64();
    let f = SchwartzVector::from_atom(level.holomorphic_vector(tau)?);
    let ann = lie_combination(
        Complex64::new(1.0, 0.0),
        -tau,
        Complex64::default(),
        &f,
        eps,
    );
    bump(
        out,
        "holomorphic",
        sup_over_samples(&ann) / sup_over_samples(&f).max(1.0),
    );

    let hs = [
        RealHeis::new(e(0.1), (0.4, -0.7), eps)?,
        RealHeis::new(e(0.35), (-1.1, 0.25), eps)?,
        RealHeis::new(e(0.8), (0.6, 0.9), eps)?,
    ];
    for x in &hs {
        for y in &hs {
            let HeisElement::Real(xy) = group_mul(&HeisElement::Real(*x), &HeisElement::Real(*y))?
            else {
                unreachable!("real times real is real")
            };
            let lhs = act_real(x, &act_real(y, &f));
            let rhs = act_real(&xy, &f);
            let diff = SAMPLES
                .iter()
                .map(|&t| (lhs.eval(t) - rhs.eval(t)).norm())
                .fold(0.0, f64::max);
            bump(
                out,
                "real_representation",
                diff / sup_over_samples(&rhs).max(1.0),
            );
        }
    }
    Ok(())
}

/// `U_{h₁}U_{h₂} = U_{h₁h₂}` on the basis of `C(ℤ/cℤ)`, over every pair when
/// `c ≤ 12` and along a diagonal sweep otherwise.
fn finite_checks(c: i64, out: &mut Residuals) -> Result<()> {
    let els: Vec<(i64, i64)> = if c <= 12 {
        (0..c).flat_map(|a| (0..c).map(move |b| (a, b))).collect()
    } else {
        (0..12)
            .map(|k| ((3 * k + 1) % c, (5 * k + 2) % c))
            .collect()
    };
    let phase = num_rational::Ratio::new(1, 3);
    for &x in &els {
        for &y in &els {
            let hx = FiniteHeis::new(phase, x, c)?;
            let hy = FiniteHeis::new(phase, y, c)?;
            let HeisElement::Finite(hxy) =
                group_mul(&HeisElement::Finite(hx), &HeisElement::Finite(hy))?
            else {
                unreachable!("finite times finite is finite")
            };
            for j in 0..c.min(12) {
                let v = FiniteVector::delta(c, j)?;
                let lhs = act_finite(&hx, &act_finite(&hy, &v)?)?;
                let rhs = act_finite(&hxy, &v)?;
                let diff = (0..c)
                    .map(|k| (lhs.get(k) - rhs.get(k)).norm())
                    .fold(0.0, f64::max);
                bump(out, "finite_representation", diff);
            }
        }
    }
    Ok(())
}

/// Module-level residuals at degrees 1 and 2.
pub fn module_suite(d: &RmData, tau: Complex64) -> Result<Residuals> {
    let mut out = Residuals::new();
    for n in 1..=2 {
        let level = Level::new(d, n)?;
        module_checks(d, &level, tau, &mut out)?;
    }
    finite_checks(Level::new(d, 1)?.modulus(), &mut out)?;
    Ok(out)
}
