use std::f64::consts::SQRT_2;

use num_bigint::BigInt;
use proptest::prelude::*;

use super::*;
use crate::apfunc::rational::{parse_rational, rational_from_f64};
use crate::apfunc::{module_basis_with_shape, FreqModule, Frequency, IrrationalBasis, Rational};

fn poly(c: &[f64]) -> Polynomial {
    Polynomial::new(c.to_vec()).unwrap()
}

/// u on [-1,1], u² on (1,2], -u² on [-2,-1).
fn kinked() -> PiecewisePoly {
    PiecewisePoly::new(
        -2.0,
        2.0,
        vec![-1.0, 1.0],
        vec![poly(&[0.0, 0.0, -1.0]), poly(&[0.0, 1.0]), poly(&[0.0, 0.0, 1.0])],
    )
    .unwrap()
}

fn power_sum(c: &[f64], u: f64) -> f64 {
    c.iter().enumerate().map(|(d, &a)| a * u.powi(d as i32)).sum()
}

/// Continuous random piecewise polynomial with the given breakpoints.
fn continuous(lo: f64, hi: f64, breaks: &[f64], raw: &[Vec<f64>]) -> PiecewisePoly {
    let mut pieces: Vec<Polynomial> = Vec::new();
    for (i, c) in raw.iter().enumerate() {
        let mut c = c.clone();
        if i > 0 {
            let b = breaks[i - 1];
            c[0] = 0.0;
            c[0] = pieces[i - 1].eval(b) - power_sum(&c, b);
        }
        pieces.push(Polynomial::new(c).unwrap());
    }
    PiecewisePoly::new(lo, hi, breaks.to_vec(), pieces).unwrap()
}

#[test]
fn eval_examples() {
    let b = PiecewiseFlux::burgers(-3.0, 3.0);
    assert_eq!(eval_flux(&b, 2.0).unwrap(), vec![2.0]);
    let f = PiecewiseFlux::scalar(kinked());
    assert_eq!(eval_flux(&f, 1.0).unwrap(), vec![1.0]);
    let g = PiecewiseFlux::scalar(
        PiecewisePoly::new(-1.0, 2.0, vec![1.0], vec![poly(&[0.0, 1.0]), poly(&[0.0, 0.0, 1.0])]).unwrap(),
    );
    assert_eq!(eval_flux(&g, 1.0).unwrap(), vec![1.0]);
    assert_eq!(g.component(0).pieces()[0].eval(1.0), g.component(0).pieces()[1].eval(1.0));
    assert!(matches!(eval_flux(&g, 2.5), Err(crate::Error::Domain { .. })));
}

#[test]
fn discontinuous_and_malformed_fluxes_are_rejected() {
    let bad = PiecewisePoly::new(-1.0, 1.0, vec![0.0], vec![poly(&[0.0, 1.0]), poly(&[1e-9, 1.0])]);
    assert!(matches!(bad, Err(crate::Error::InvalidFlux(_))));
    assert!(PiecewisePoly::new(-1.0, 1.0, vec![0.5, 0.2], vec![poly(&[0.0]); 3]).is_err());
    assert!(Polynomial::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).is_err());
}

#[test]
fn eval_matches_power_sum_oracle() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    use rand::{Rng, SeedableRng};
    for _ in 0..20 {
        let nb = rng.gen_range(0..4);
        let mut breaks: Vec<f64> = (0..nb).map(|_| rng.gen_range(-0.9..0.9)).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let raw: Vec<Vec<f64>> = (0..=breaks.len())
            .map(|_| (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let f = continuous(-1.0, 1.0, &breaks, &raw);
        for _ in 0..100 {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            let piece = breaks.iter().filter(|&&b| b <= u).count();
            let oracle = power_sum(f.pieces()[piece].coeffs(), u);
            assert!((f.eval(u).unwrap() - oracle).abs() < 1e-14);
        }
    }
}

#[test]
fn lipschitz_examples() {
    assert_eq!(lipschitz_bound(&PiecewiseFlux::burgers(-1.0, 1.0), -1.0, 1.0).unwrap(), 1.0);
    let lin = PiecewiseFlux::polynomial(-5.0, 5.0, vec![0.0, 3.0]).unwrap();
    assert_eq!(lipschitz_bound(&lin, -2.0, 4.0).unwrap(), 3.0);
    assert_eq!(lipschitz_bound(&lin, 1.0, 1.0).unwrap(), 3.0);

    let cubic = PiecewiseFlux::polynomial(-2.0, 2.0, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    let bound = lipschitz_bound(&cubic, -2.0, 2.0).unwrap();
    let sampled = (0..=100_000)
        .map(|i| {
            let u = -2.0 + 4.0 * i as f64 / 100_000.0;
            (3.0 * u * u).abs()
        })
        .fold(0.0, f64::max);
    assert!(bound >= sampled && bound - sampled < 1e-9);
    assert_eq!(bound, 12.0);
}

#[test]
fn lipschitz_sees_interior_critical_points() {
    // Derivative 1 - 3u² + ... peaks inside the interval.
    let f = PiecewiseFlux::polynomial(-2.0, 2.0, vec![0.0, 1.0, 0.0, -1.0]).unwrap();
    let bound = lipschitz_bound(&f, -0.5, 0.5).unwrap();
    assert_eq!(bound, 1.0);
}

#[test]
fn affine_interval_examples() {
    let v = maximal_affine_interval(&kinked(), 0.0).unwrap();
    assert_eq!(
        v,
        AffineVicinity::Interval(AffineInterval {
            a: -1.0,
            b: 1.0,
            slope: 1.0,
            offset: 0.0
        })
    );
    let burgers = PiecewiseFlux::burgers(-1.0, 1.0);
    assert_eq!(
        maximal_affine_interval(burgers.component(0), 0.0).unwrap(),
        AffineVicinity::Point { level: 0.0 }
    );
    // Breakpoint between an affine and a curved piece.
    assert_eq!(
        maximal_affine_interval(&kinked(), 1.0).unwrap(),
        AffineVicinity::Point { level: 1.0 }
    );
}

#[test]
fn equal_slope_pieces_merge_across_breakpoint() {
    let f = PiecewisePoly::new(
        -3.0,
        3.0,
        vec![-1.0, 0.0, 2.0],
        vec![
            poly(&[-1.0, 0.0, -1.0]),
            poly(&[0.0, 2.0]),
            poly(&[0.0, 2.0]),
            poly(&[0.0, 0.0, 1.0]),
        ],
    )
    .unwrap();
    // Symbolic merge oracle: walk the pieces and compare coefficient vectors.
    let at = 0.0;
    let k = f.piece_index(at);
    let same = |i: usize| f.pieces()[i].coeffs() == f.pieces()[k].coeffs();
    let mut lo = k;
    while lo > 0 && same(lo - 1) {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < f.pieces().len() && same(hi + 1) {
        hi += 1;
    }
    let iv = *maximal_affine_interval(&f, at).unwrap().interval().unwrap();
    assert_eq!((iv.a, iv.b), (f.piece_bounds(lo).0, f.piece_bounds(hi).1));
    assert_eq!((iv.a, iv.b, iv.slope, iv.offset), (-1.0, 2.0, 2.0, 0.0));
}

#[test]
fn affine_interval_residual_and_maximality() {
    let f = kinked();
    let iv = *maximal_affine_interval(&f, 0.3).unwrap().interval().unwrap();
    for i in 0..1000 {
        let u = iv.a + (iv.b - iv.a) * i as f64 / 999.0;
        assert!((f.eval(u).unwrap() - (iv.slope * u + iv.offset)).abs() <= 1e-13);
    }
    assert!(affine_residual(&f, iv.a, iv.b, iv.slope, iv.offset) == 0.0);
    // Extending by the adjacent piece on either side breaks affinity.
    for (a, b) in [(-2.0, iv.b), (iv.a, 2.0)] {
        let worst = (0..1000)
            .map(|i| {
                let u = a + (b - a) * i as f64 / 999.0;
                (f.eval(u).unwrap() - (iv.slope * u + iv.offset)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst > 1e-13);
        assert!(affine_residual(&f, a, b, iv.slope, iv.offset) > 0.0);
    }
}

fn z2() -> FreqModule {
    module_basis_with_shape(
        &[
            Frequency::new(vec![vec![Rational::from_integer(1.into())], vec![Rational::from_integer(0.into())]]).unwrap(),
            Frequency::new(vec![vec![Rational::from_integer(0.into())], vec![Rational::from_integer(1.into())]]).unwrap(),
        ],
        2,
        1,
    )
}

fn two_component(a: Vec<f64>, b: Vec<f64>) -> PiecewiseFlux {
    PiecewiseFlux::new(vec![
        PiecewisePoly::polynomial(-2.0, 2.0, poly(&a)).unwrap(),
        PiecewisePoly::polynomial(-2.0, 2.0, poly(&b)).unwrap(),
    ])
    .unwrap()
}

#[test]
fn nondegeneracy_examples() {
    let m1 = crate::apfunc::module_basis(&[Frequency::scalar(vec![Rational::from_integer(1.into())]).unwrap()]);
    let v = nondegeneracy_check(&PiecewiseFlux::burgers(-1.0, 1.0), &m1, 0.0).unwrap();
    assert!(v.pass());

    let f = two_component(vec![0.0, 0.0, 0.5], vec![0.0, 1.0]);
    let v = nondegeneracy_check(&f, &z2(), 0.0).unwrap();
    assert!(!v.pass());
    assert_eq!(v.witness_coords.clone().unwrap(), vec![BigInt::from(0), BigInt::from(1)]);
    let report = v.report(&IrrationalBasis::rationals());
    assert_eq!(report.verdict, "fail");
    assert_eq!(report.witness_value, Some(vec![0.0, 1.0]));
}

#[test]
fn cubic_pair_passes_bounded_enumeration() {
    let f = two_component(vec![0.0, 0.0, 0.5], vec![0.0, 0.0, 0.0, 1.0]);
    assert!(nondegeneracy_check(&f, &z2(), 0.0).unwrap().pass());
    // ξ·φ = ξ1 u²/2 + ξ2 u³ is affine only if both coefficients vanish.
    for x1 in -20i32..=20 {
        for x2 in -20i32..=20 {
            let affine = x1 as f64 * 0.5 == 0.0 && x2 as f64 == 0.0;
            assert_eq!(affine, x1 == 0 && x2 == 0);
        }
    }
}

/// Exact coefficients of `ξ·φ` on the piece of each component touching
/// `level` from the given side, split by irrational basis element.
fn oracle_affine(f: &PiecewiseFlux, xi: &Frequency, level: f64) -> bool {
    let p = xi.basis_len();
    let side_coeffs = |left: bool| -> Vec<Vec<Rational>> {
        (0..p)
            .map(|l| {
                (0..=MAX_DEGREE)
                    .map(|d| {
                        let mut acc = Rational::from_integer(0.into());
                        for (i, c) in f.components().iter().enumerate() {
                            let idx = if left {
                                c.breaks().iter().filter(|&&b| b < level).count()
                            } else {
                                c.breaks().iter().filter(|&&b| b <= level).count()
                            };
                            acc += rational_from_f64(c.pieces()[idx].coeff(d)) * &xi.coords()[i][l];
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    };
    let (lo, hi) = f.working_interval();
    let mut sides = Vec::new();
    if level > lo {
        sides.push(side_coeffs(true));
    }
    if level < hi {
        sides.push(side_coeffs(false));
    }
    let zero = Rational::from_integer(0.into());
    let flat = sides
        .iter()
        .all(|s| s.iter().all(|cs| cs[2..].iter().all(|c| *c == zero)));
    let same_slope = sides.windows(2).all(|w| (0..p).all(|l| w[0][l][1] == w[1][l][1]));
    flat && same_slope
}

fn lattice_points(m: usize, r: i64) -> Vec<Vec<BigInt>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-r..=r).map(move |x| {
                    let mut w = v.clone();
                    w.push(BigInt::from(x));
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().any(|x| *x != BigInt::from(0)));
    out
}

fn half(n: i32) -> f64 {
    n as f64 / 2.0
}

prop_compose! {
    fn random_case()(
        alpha in prop::array::uniform2(-2i32..=2),
        g in prop::array::uniform2(prop::array::uniform3(-2i32..=2)),
        extra in prop::array::uniform4(prop::array::uniform3(prop::sample::select(vec![0, 0, 0, 0, 1, -1, 2]))),
        slopes in prop::array::uniform4(-2i32..=2),
        level in prop::sample::select(vec![-1.0, 0.5, 1.25]),
        gens in prop::collection::vec(prop::array::uniform4(-2i32..=2), 1..=2),
        irrational in any::<bool>(),
    ) -> (PiecewiseFlux, FreqModule, f64) {
        let comps: Vec<PiecewisePoly> = (0..2).map(|i| {
            let raw: Vec<Vec<f64>> = (0..2).map(|pc| {
                let mut c = vec![0.0, half(slopes[2 * i + pc])];
                for d in 0..3 {
                    c.push(half(alpha[i] * g[pc][d] + extra[2 * i + pc][d]));
                }
                c
            }).collect();
            continuous(-2.0, 2.0, &[0.5], &raw)
        }).collect();
        let f = PiecewiseFlux::new(comps).unwrap();
        let p = if irrational { 2 } else { 1 };
        let freqs: Vec<Frequency> = gens.iter().map(|v| {
            let q = |x: i32| Rational::from_integer(x.into());
            if irrational {
                Frequency::new(vec![vec![q(v[0]), q(v[1])], vec![q(v[2]), q(v[3])]]).unwrap()
            } else {
                Frequency::new(vec![vec![q(v[0])], vec![q(v[1])]]).unwrap()
            }
        }).collect();
        (f, module_basis_with_shape(&freqs, 2, p), level)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nondegeneracy_matches_lattice_enumeration((f, m, level) in random_case()) {
        let v = nondegeneracy_check(&f, &m, level).unwrap();
        let brute = lattice_points(m.rank(), 10)
            .into_iter()
            .find(|k| oracle_affine(&f, &m.element(k), level));
        prop_assert_eq!(v.pass(), brute.is_none(), "witness {:?} vs brute {:?}", v.witness_coords, brute);
        if let Some(w) = &v.witness {
            prop_assert!(!w.is_zero());
            prop_assert!(oracle_affine(&f, w, level));
            prop_assert!(m.contains(w));
        }
    }

    #[test]
    fn lift_is_linear(a in prop::collection::vec(-2.0f64..2.0, 1..5), b in prop::collection::vec(-2.0f64..2.0, 1..5)) {
        let basis = IrrationalBasis::sqrt2();
        let m = crate::apfunc::module_basis(&[
            Frequency::scalar(vec![parse_rational("1").unwrap(), parse_rational("0").unwrap()]).unwrap(),
            Frequency::scalar(vec![parse_rational("0").unwrap(), parse_rational("1").unwrap()]).unwrap(),
        ]);
        let fa = PiecewiseFlux::polynomial(-1.0, 1.0, a.clone()).unwrap();
        let fb = PiecewiseFlux::polynomial(-1.0, 1.0, b.clone()).unwrap();
        let sum: Vec<f64> = (0..a.len().max(b.len()))
            .map(|d| a.get(d).unwrap_or(&0.0) + b.get(d).unwrap_or(&0.0))
            .collect();
        let fs = PiecewiseFlux::polynomial(-1.0, 1.0, sum).unwrap();
        let (la, lb, ls) = (lift_flux(&fa, &m, &basis).unwrap(), lift_flux(&fb, &m, &basis).unwrap(), lift_flux(&fs, &m, &basis).unwrap());
        for j in 0..2 {
            let pa = &la.component(j).pieces()[0];
            let pb = &lb.component(j).pieces()[0];
            let ps = &ls.component(j).pieces()[0];
            for d in 0..=MAX_DEGREE {
                prop_assert!((pa.coeff(d) + pb.coeff(d) - ps.coeff(d)).abs() <= 1e-15 * (1.0 + ps.coeff(d).abs()));
            }
        }
    }
}

#[test]
fn lift_examples() {
    let basis = IrrationalBasis::sqrt2();
    let q = |s: &str| parse_rational(s).unwrap();
    let m = crate::apfunc::module_basis(&[
        Frequency::scalar(vec![q("1"), q("0")]).unwrap(),
        Frequency::scalar(vec![q("0"), q("1")]).unwrap(),
    ]);
    let f = PiecewiseFlux::scalar(kinked());
    let l = lift_flux(&f, &m, &basis).unwrap();
    assert_eq!(l.dim(), 2);
    for i in 0..=40 {
        let u = -2.0 + i as f64 / 10.0;
        let v = f.eval(u).unwrap()[0];
        let w = l.eval(u).unwrap();
        assert!((w[0] - v).abs() < 1e-15 && (w[1] - SQRT_2 * v).abs() < 1e-14);
    }

    let m1 = crate::apfunc::module_basis(&[Frequency::scalar(vec![q("1")]).unwrap()]);
    let b = PiecewiseFlux::burgers(-1.0, 1.0);
    assert_eq!(lift_flux(&b, &m1, &IrrationalBasis::rationals()).unwrap(), b);

    // Two spatial dimensions, basis {(1,0),(0,√2)}.
    let m2 = module_basis_with_shape(
        &[
            Frequency::new(vec![vec![q("1"), q("0")], vec![q("0"), q("0")]]).unwrap(),
            Frequency::new(vec![vec![q("0"), q("0")], vec![q("0"), q("1")]]).unwrap(),
        ],
        2,
        2,
    );
    let f2 = two_component(vec![0.0, 0.0, 0.5], vec![0.0, 0.0, 0.0, 1.0]);
    let l2 = lift_flux(&f2, &m2, &basis).unwrap();
    let lam = m2.basis_values(&basis);
    for i in 0..50 {
        let u = -2.0 + 4.0 * i as f64 / 49.0;
        let phi = [0.5 * u * u, u * u * u];
        let got = l2.eval(u).unwrap();
        for j in 0..2 {
            let want = lam[j][0] * phi[0] + lam[j][1] * phi[1];
            assert!((got[j] - want).abs() < 1e-13);
        }
    }
}

#[test]
fn candidates_cover_extrema() {
    let f = PiecewisePoly::polynomial(-2.0, 2.0, poly(&[0.0, -1.0, 0.0, 1.0])).unwrap();
    let c = f.extremum_candidates();
    let r = 1.0 / 3f64.sqrt();
    assert_eq!(c.len(), 2);
    assert!((c[0] + r).abs() < 1e-15 && (c[1] - r).abs() < 1e-15);
    assert_eq!(kinked().extremum_candidates(), vec![-1.0, 1.0]);
}

#[test]
fn galilean_shift_and_scaling() {
    let f = kinked().minus_linear(1.0);
    let iv = *maximal_affine_interval(&f, 0.0).unwrap().interval().unwrap();
    assert_eq!(iv.slope, 0.0);
    assert_eq!(kinked().scaled(2.0).eval(1.5).unwrap(), 4.5);
}

#[test]
fn json_round_trip() {
    let f = PiecewiseFlux::scalar(kinked());
    let json = serde_json::to_string(&f.to_doc()).unwrap();
    assert_eq!(FluxDoc::parse(&json).unwrap(), f);
    let full = r#"{"working_interval":[-1,1],"components":[{"breakpoints":[-1,0,1],"coefficients":[[0,1],[0,1,1]]}]}"#;
    let g = FluxDoc::parse(full).unwrap();
    assert_eq!(g.component(0).breaks(), &[0.0]);
}
