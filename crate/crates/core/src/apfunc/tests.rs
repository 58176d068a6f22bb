use std::f64::consts::{PI, SQRT_2, TAU};

use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;

fn q(s: &str) -> Rational {
    rational::parse_rational(s).unwrap()
}

fn f1(coords: &[&str]) -> Frequency {
    Frequency::scalar(coords.iter().map(|s| q(s)).collect()).unwrap()
}

fn sin_plus_sin_sqrt2() -> TrigPolynomial {
    TrigPolynomial::builder(1, 2)
        .sin(f1(&["1", "0"]), 1.0)
        .sin(f1(&["0", "1"]), 1.0)
        .build()
        .unwrap()
}

#[test]
fn eval_constant_and_sine() {
    let basis = IrrationalBasis::rationals();
    let c = TrigPolynomial::constant(1, 1, 3.0);
    assert_eq!(eval_trig(&c, &basis, &[0.77]).unwrap(), 3.0);

    let s = TrigPolynomial::from_terms(
        1,
        1,
        [
            (f1(&["1"]), Complex64::new(0.0, -0.5)),
            (f1(&["-1"]), Complex64::new(0.0, 0.5)),
        ],
    )
    .unwrap();
    assert!((eval_trig(&s, &basis, &[0.25]).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn eval_matches_direct_summation() {
    let basis = IrrationalBasis::sqrt2();
    let p = sin_plus_sin_sqrt2();
    for &x in &[0.3, -1.7, 12.25, 1000.125] {
        let direct = (TAU * x).sin() + (TAU * SQRT_2 * x).sin();
        let v = eval_trig(&p, &basis, &[x]).unwrap();
        assert!((v - direct).abs() < 1e-12 * (1.0 + x.abs() / 100.0), "x={x}: {v} vs {direct}");
    }
}

#[test]
fn non_hermitian_input_is_rejected() {
    let err = TrigPolynomial::from_terms(1, 1, [(f1(&["1"]), Complex64::new(1.0, 0.0))]);
    assert!(matches!(err, Err(crate::Error::InvalidPolynomial(_))));
    let err = TrigPolynomial::from_terms(1, 1, [(f1(&["0"]), Complex64::new(1.0, 0.5))]);
    assert!(err.is_err());
}

#[test]
fn mean_and_spectrum() {
    let (m, sp) = mean_and_coefficients(&TrigPolynomial::constant(1, 1, 5.0));
    assert_eq!(m, 5.0);
    assert!(sp.is_empty());

    let p = TrigPolynomial::builder(1, 1).constant(2.0).sin(f1(&["1"]), 1.0).build().unwrap();
    let (m, sp) = mean_and_coefficients(&p);
    assert_eq!(m, 2.0);
    assert_eq!(sp.into_iter().collect::<Vec<_>>(), vec![f1(&["-1"]), f1(&["1"])]);
}

#[test]
fn mean_matches_long_window_average() {
    // Two-frequency signal with an offset; the oracle averages point values.
    let p = TrigPolynomial::builder(1, 2)
        .constant(0.4)
        .cos(f1(&["1", "0"]), 0.7)
        .sin(f1(&["0", "1/2"]), 0.3)
        .build()
        .unwrap();
    let (mean, _) = mean_and_coefficients(&p);
    let r = 2000.0;
    let n = 400_000;
    let avg: f64 = (0..n)
        .map(|i| {
            let x = -r / 2.0 + (i as f64 + 0.5) * r / n as f64;
            0.4 + 0.7 * (TAU * x).cos() + 0.3 * (PI * SQRT_2 * x).sin()
        })
        .sum::<f64>()
        / n as f64;
    assert!((mean - avg).abs() < 1e-3, "{mean} vs {avg}");
    assert_eq!(mean, 0.4);
}

#[test]
fn module_basis_examples() {
    let m = module_basis(&[f1(&["0", "1"]), f1(&["0", "2"]), f1(&["3", "0"])]);
    assert_eq!(m.basis(), &[f1(&["3", "0"]), f1(&["0", "1"])]);
    for g in m.generators() {
        assert!(m.contains(g));
    }

    let m = module_basis(&[f1(&["1/2"]), f1(&["1/3"])]);
    assert_eq!(m.basis(), &[f1(&["1/6"])]);

    let m = module_basis(&[f1(&["0"])]);
    assert_eq!(m.rank(), 0);
    assert!(m.basis().is_empty());
}

#[test]
fn rational_gcd_oracle_for_rank_one_modules() {
    // Independent route: gcd of numerators over the common denominator.
    use num_integer::Integer;
    let cases: &[&[&str]] = &[&["1/2", "1/3"], &["4/15", "6/25"], &["-3/4", "9/8", "3/2"], &["7"]];
    for gens in cases {
        let qs: Vec<Rational> = gens.iter().map(|s| q(s)).collect();
        let den = qs.iter().fold(BigInt::from(1), |a, x| a.lcm(x.denom()));
        let g = qs
            .iter()
            .map(|x| (x * Rational::from_integer(den.clone())).to_integer())
            .fold(BigInt::from(0), |a, b| a.gcd(&b));
        let expected = Rational::new(g, den);
        let m = module_basis(&gens.iter().map(|s| f1(&[s])).collect::<Vec<_>>());
        assert_eq!(m.basis(), &[Frequency::scalar(vec![expected]).unwrap()]);
    }
}

#[test]
fn module_coordinates_and_membership() {
    let m = module_basis(&[f1(&["1", "0"]), f1(&["0", "1"])]);
    let k = m.coordinates(&f1(&["-3", "5"])).unwrap();
    assert_eq!(k, vec![BigInt::from(-3), BigInt::from(5)]);
    assert!(!m.contains(&f1(&["1/2", "0"])));
    assert_eq!(m.element(&k), f1(&["-3", "5"]));
}

#[test]
fn lifted_seminorm_of_constant_and_sine() {
    let basis = IrrationalBasis::rationals();
    let c = TrigPolynomial::constant(1, 1, -2.5);
    let m = module_basis(&[]);
    let est = n1_seminorm(
        &c,
        &basis,
        &SeminormMethod::Lifted {
            module: &m,
            quadrature: LiftedQuadrature::for_rank(0, 1e-8),
        },
    )
    .unwrap();
    assert_eq!(est.value, 2.5);

    let s = TrigPolynomial::builder(1, 1).sin(f1(&["1"]), 1.0).build().unwrap();
    let m = module_basis(&[f1(&["1"])]);
    let est = n1_seminorm(
        &s,
        &basis,
        &SeminormMethod::Lifted {
            module: &m,
            quadrature: LiftedQuadrature::for_rank(1, 1e-8),
        },
    )
    .unwrap();
    assert!((est.value - 2.0 / PI).abs() < 1e-6, "{}", est.value);
    assert!(est.warning.is_none());
}

#[test]
fn lifted_and_windowed_seminorm_of_two_frequency_sum() {
    // |sin a + sin b| = 2|sin((a+b)/2)||cos((a-b)/2)|, and the sum and
    // difference angles are equidistributed on the torus, so the torus
    // integral is 2 (2/π)^2.
    let oracle = 8.0 / (PI * PI);
    let basis = IrrationalBasis::sqrt2();
    let p = sin_plus_sin_sqrt2();
    let (_, sp) = mean_and_coefficients(&p);
    let m = module_basis(&sp.into_iter().collect::<Vec<_>>());
    let lifted = n1_seminorm(
        &p,
        &basis,
        &SeminormMethod::Lifted {
            module: &m,
            quadrature: LiftedQuadrature::for_rank(2, 1e-5),
        },
    )
    .unwrap();
    assert!((lifted.value - oracle).abs() < 1e-4, "{} vs {oracle}", lifted.value);

    let windowed = n1_seminorm(
        &p,
        &basis,
        &SeminormMethod::Windowed(WindowSchedule {
            windows: vec![250.0, 500.0, 1000.0],
            samples_per_unit: None,
        }),
    )
    .unwrap();
    assert!((windowed.value - lifted.value).abs() < 1e-2);
    assert!(windowed.increment < 1e-2);
}

#[test]
fn lifted_rank_four_is_a_capability_error() {
    let basis = IrrationalBasis::new(
        vec!["1".into(), "a".into(), "b".into(), "c".into()],
        vec![1.0, SQRT_2, 3f64.sqrt(), 5f64.sqrt()],
    )
    .unwrap();
    let mut b = TrigPolynomial::builder(1, 4);
    for j in 0..4 {
        b = b.cos(Frequency::unit(4, j, 1), 1.0);
    }
    let p = b.build().unwrap();
    let (_, sp) = mean_and_coefficients(&p);
    let m = module_basis(&sp.into_iter().collect::<Vec<_>>());
    let r = n1_seminorm(
        &p,
        &basis,
        &SeminormMethod::Lifted {
            module: &m,
            quadrature: LiftedQuadrature::for_rank(4, 1e-6),
        },
    );
    assert!(matches!(r, Err(crate::Error::Capability(_))));
}

#[test]
fn unconverged_quadrature_attaches_warning() {
    let basis = IrrationalBasis::rationals();
    let s = TrigPolynomial::builder(1, 1).sin(f1(&["1"]), 1.0).build().unwrap();
    let m = module_basis(&[f1(&["1"])]);
    let est = n1_seminorm(
        &s,
        &basis,
        &SeminormMethod::Lifted {
            module: &m,
            quadrature: LiftedQuadrature {
                tol: 1e-14,
                start_cells: 8,
                max_cells: 64,
            },
        },
    )
    .unwrap();
    assert!(est.warning.is_some());
}

#[test]
fn windowed_monomial_averages() {
    let basis = IrrationalBasis::sqrt2();
    // cos is the real part of the monomial; its window average tends to 0.
    let p = TrigPolynomial::builder(1, 2).cos(f1(&["0", "1"]), 1.0).build().unwrap();
    let eval = p.evaluator(&basis).unwrap();
    for &r in &[100.0, 1000.0] {
        let n = (r * 64.0) as usize;
        let avg: f64 = (0..n)
            .map(|i| eval.eval_1d(-r / 2.0 + (i as f64 + 0.5) * r / n as f64).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(avg.abs() < 1e-2);
    }
    let one = TrigPolynomial::constant(1, 2, 1.0);
    let est = n1_seminorm(
        &one,
        &basis,
        &SeminormMethod::Windowed(WindowSchedule {
            windows: vec![10.0, 20.0],
            samples_per_unit: Some(8.0),
        }),
    )
    .unwrap();
    assert!((est.value - 1.0).abs() < 1e-12);
}

#[test]
fn cutoff_examples() {
    assert_eq!(cutoff(2.0, 0.0, 1.0).unwrap(), 1.0);
    assert_eq!(cutoff(0.5, 0.0, 1.0).unwrap(), 0.5);
    assert_eq!(cutoff(-7.0, f64::NEG_INFINITY, 3.0).unwrap(), -7.0);
    assert!(matches!(cutoff(0.0, 1.0, 0.0), Err(crate::Error::InvalidInterval { .. })));
}

#[test]
fn serialization_round_trip() {
    let basis = IrrationalBasis::sqrt2();
    let p = TrigPolynomial::builder(1, 2)
        .constant(0.25)
        .sin(f1(&["1", "0"]), 0.5)
        .cos(f1(&["1/3", "2"]), 0.5)
        .build()
        .unwrap();
    let json = serde_json::to_string(&TrigDoc::from_polynomial(&p, &basis)).unwrap();
    assert!(json.contains("\"1/3\""));
    let (p2, b2) = TrigDoc::parse(&json).unwrap();
    assert_eq!(p, p2);
    assert_eq!(basis, b2);
}

fn fixed_grid(m: &FreqModule) -> SeminormMethod<'_> {
    SeminormMethod::Lifted {
        module: m,
        quadrature: LiftedQuadrature::fixed(128),
    }
}

fn small_poly() -> impl Strategy<Value = TrigPolynomial> {
    prop::collection::vec((-3i64..=3, -2i64..=2, -1.0f64..1.0, -1.0f64..1.0), 1..4).prop_map(|ts| {
        let mut b = TrigPolynomial::builder(1, 2);
        for (k1, k2, re, im) in ts {
            let f = Frequency::scalar(vec![
                Rational::from_integer(k1.into()),
                Rational::from_integer(k2.into()),
            ])
            .unwrap();
            if f.is_zero() {
                b = b.constant(re);
            } else {
                b = b.cos_phase(f, re.abs() + 0.1, im * PI);
            }
        }
        b.build().unwrap()
    })
}

fn common_module(ps: &[&TrigPolynomial]) -> FreqModule {
    let gens: Vec<Frequency> = ps
        .iter()
        .flat_map(|p| mean_and_coefficients(p).1)
        .collect();
    module_basis_with_shape(&gens, 1, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn seminorm_axioms(p in small_poly(), r in small_poly(), alpha in -3.0f64..3.0) {
        let basis = IrrationalBasis::sqrt2();
        let m = common_module(&[&p, &r]);
        let n1 = |x: &TrigPolynomial| n1_seminorm(x, &basis, &fixed_grid(&m)).unwrap().value;
        let zero = TrigPolynomial::constant(1, 2, 0.0);
        prop_assert_eq!(n1(&zero), 0.0);
        prop_assert!((n1(&p.scale(alpha)) - alpha.abs() * n1(&p)).abs() < 1e-8);
        prop_assert!(n1(&p.add(&r).unwrap()) <= n1(&p) + n1(&r) + 1e-8);
    }

    #[test]
    fn lifted_seminorm_is_shift_invariant(p in small_poly(), h in -50.0f64..50.0) {
        let basis = IrrationalBasis::sqrt2();
        let m = common_module(&[&p]);
        let a = n1_seminorm(&p, &basis, &SeminormMethod::Lifted {
            module: &m, quadrature: LiftedQuadrature::for_rank(m.rank(), 1e-6) }).unwrap().value;
        let b = n1_seminorm(&p.shifted(&basis, &[h]), &basis, &SeminormMethod::Lifted {
            module: &m, quadrature: LiftedQuadrature::for_rank(m.rank(), 1e-6) }).unwrap().value;
        prop_assert!((a - b).abs() < 1e-5, "{} vs {}", a, b);
    }

    #[test]
    fn module_basis_is_idempotent(gens in prop::collection::vec((-6i64..=6, 1i64..=6, -6i64..=6, 1i64..=6), 1..5)) {
        let fs: Vec<Frequency> = gens.iter().map(|&(a, b, c, d)| Frequency::scalar(vec![
            Rational::new(a.into(), b.into()), Rational::new(c.into(), d.into())]).unwrap()).collect();
        let m = module_basis_with_shape(&fs, 1, 2);
        for g in &fs {
            prop_assert!(m.contains(g));
        }
        let again = module_basis_with_shape(m.basis(), 1, 2);
        prop_assert_eq!(again.basis(), m.basis());
        // Every basis element is an integer combination of the generators:
        // the module of the generators plus one basis element is unchanged.
        for b in m.basis() {
            let mut with = fs.clone();
            with.push(b.clone());
            let grown = module_basis_with_shape(&with, 1, 2);
            prop_assert_eq!(grown.basis(), m.basis());
        }
    }

    #[test]
    fn cutoff_is_lipschitz_and_idempotent(u in -5.0f64..5.0, v in -5.0f64..5.0, a in -2.0f64..0.0, w in 0.0f64..3.0) {
        let b = a + w;
        let cu = cutoff(u, a, b).unwrap();
        let cv = cutoff(v, a, b).unwrap();
        prop_assert!((cu - cv).abs() <= (u - v).abs());
        prop_assert_eq!(cutoff(cu, a, b).unwrap(), cu);
    }
}

#[test]
fn torus_sampling_matches_exact_lift() {
    let basis = IrrationalBasis::sqrt2();
    let p = sin_plus_sin_sqrt2();
    let m = common_module(&[&p]);
    let lifted = LiftedPolynomial::new(&p, &m).unwrap();
    let values = lifted.sample_midpoints(&[8, 16]);
    for i in 0..8 {
        for j in 0..16 {
            let y = [(i as f64 + 0.5) / 8.0, (j as f64 + 0.5) / 16.0];
            let exact = (TAU * y[0]).sin() + (TAU * y[1]).sin();
            assert!((values[i * 16 + j] - exact).abs() < 1e-13);
            assert!((lifted.eval(&y) - exact).abs() < 1e-13);
        }
    }
    // u0(x) = P(y(x)) along the embedding line.
    for &x in &[0.1, 3.7, -20.3] {
        let direct = eval_trig(&p, &basis, &[x]).unwrap();
        let y = [x - x.floor(), (SQRT_2 * x) - (SQRT_2 * x).floor()];
        assert!((lifted.eval(&y) - direct).abs() < 1e-12);
    }
}
