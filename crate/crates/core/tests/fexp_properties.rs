use std::f64::consts::LN_2;

use cfdim::cf::{digits_of, RealPoint};
use cfdim::fexp::*;
use cfdim::mc::{chi_square_p_value, substream};
use cfdim::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;

const SEEDS: [u64; 3] = [1, 42, 1337];

/// `f(t) = 1/t` through the generic floating-point digit recursion only.
struct FloatCf;

impl ExpansionScheme for FloatCf {
    fn name(&self) -> String {
        "float-cf".into()
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn branch_bound(&self) -> Option<u64> {
        None
    }
    fn f(&self, t: f64) -> f64 {
        1.0 / t
    }
    fn f_inv(&self, x: f64) -> f64 {
        1.0 / x
    }
    fn is_digit(&self, a: u64) -> bool {
        a >= 1
    }
    fn first_digit(&self) -> u64 {
        1
    }
}

/// `f(t) = t/3` through the generic floating-point digit recursion only.
struct FloatBase3;

impl ExpansionScheme for FloatBase3 {
    fn name(&self) -> String {
        "float-base-3".into()
    }
    fn direction(&self) -> Direction {
        Direction::Increasing
    }
    fn branch_bound(&self) -> Option<u64> {
        Some(3)
    }
    fn f(&self, t: f64) -> f64 {
        t / 3.0
    }
    fn f_inv(&self, x: f64) -> f64 {
        x * 3.0
    }
    fn is_digit(&self, a: u64) -> bool {
        a < 3
    }
    fn first_digit(&self) -> u64 {
        0
    }
}

fn random_point(rng: &mut impl Rng, bits: u32) -> RealPoint {
    let den = BigInt::from(1) << bits;
    let num: BigInt = (0..bits / 32).fold(BigInt::from(0), |acc, _| (acc << 32) + BigInt::from(rng.random::<u32>()));
    RealPoint::approx(BigRational::new(num.max(BigInt::from(1)), den), bits).unwrap()
}

/// Digits from the float recursion, cut at the point where precision runs
/// out.
fn float_prefix<S: ExpansionScheme>(s: &S, x: &RealPoint, n: usize) -> Vec<u64> {
    match digits_f(s, x, n) {
        Ok(d) => d,
        Err(Error::PrecisionExhausted { emitted }) => digits_f(s, x, emitted).unwrap(),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn cf_instance_agrees_with_cf_core() {
    for seed in SEEDS {
        let mut rng = substream(seed, 3);
        let mut long_prefixes = 0;
        for _ in 0..100 {
            let x = random_point(&mut rng, 256);
            let core = digits_of(&x, 10).unwrap().into_digits();
            assert_eq!(digits_f(&BuiltinScheme::Cf, &x, 10).unwrap(), core);
            let float = float_prefix(&FloatCf, &x, 10);
            assert_eq!(float[..], core[..float.len()]);
            long_prefixes += (float.len() == 10) as usize;
        }
        assert!(long_prefixes >= 90, "seed {seed}: only {long_prefixes} full prefixes");
    }
}

#[test]
fn base_instance_float_matches_exact() {
    let b3 = BuiltinScheme::base(3).unwrap();
    for seed in SEEDS {
        let mut rng = substream(seed, 4);
        for _ in 0..100 {
            let x = random_point(&mut rng, 256);
            let exact = digits_f(&b3, &x, 20).unwrap();
            let float = float_prefix(&FloatBase3, &x, 20);
            assert!(float.len() >= 15);
            assert_eq!(float[..], exact[..float.len()]);
        }
    }
}

fn schemes() -> Vec<BuiltinScheme> {
    vec![BuiltinScheme::Cf, BuiltinScheme::base(2).unwrap(), BuiltinScheme::base(7).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shift_law(num in 1u64..1_000_000, n in 1usize..=12, which in 0usize..3) {
        let s = &schemes()[which];
        let x = BigRational::new(num.into(), 1_000_003u64.into());
        let long = digits_f(s, &RealPoint::exact(x.clone()).unwrap(), n + 1);
        let tx = t_map_exact(s, &x);
        if let (Ok(long), Ok(tx)) = (long, tx) {
            let short = digits_f(s, &RealPoint::exact(tx).unwrap(), n);
            if let Ok(short) = short {
                prop_assert_eq!(&short[..], &long[1..]);
            }
        }
    }

    #[test]
    fn float_shift_law(x in 0.001f64..0.999, n in 1usize..=6) {
        let s = BuiltinScheme::Cf;
        let long = digits_f(&FloatCf, &RealPoint::from_f64(x).unwrap(), n + 1);
        let tx = t_map_f(&s, x).unwrap();
        let short = digits_f(&FloatCf, &RealPoint::from_f64(tx).unwrap(), n);
        if let (Ok(long), Ok(short)) = (long, short) {
            prop_assert_eq!(&short[..], &long[1..]);
        }
    }

    #[test]
    fn reconstruction_brackets_the_point(num in 1u64..1_000_000, n in 1usize..=12, which in 0usize..3) {
        let s = &schemes()[which];
        let x = BigRational::new(num.into(), 1_000_003u64.into());
        if let Ok(d) = digits_f(s, &RealPoint::exact(x.clone()).unwrap(), n) {
            let (lo, hi) = reconstruct_f(s, &d).unwrap();
            prop_assert!(lo <= x && x <= hi);
        }
    }
}

#[test]
fn ulam_density_is_a_fixed_point() {
    let tol = 1e-12;
    for (scheme, bins) in [(BuiltinScheme::base(3).unwrap(), 243), (BuiltinScheme::Cf, 256)] {
        let d = ulam_invariant_density(&scheme, bins, 2000, tol).unwrap();
        let r = ulam_residual(&scheme, &d).unwrap();
        assert!(r < tol, "{}: {r}", scheme.name());
    }
}

fn pushforward_p_value<F: Cumulative>(scheme: &BuiltinScheme, cdf: &F, seed: u64) -> f64 {
    let bins = 20;
    let mut rng = substream(seed, 5);
    let mut counts = vec![0u64; bins];
    for _ in 0..100_000 {
        let u: f64 = rng.random();
        if let Ok(y) = conjugated_map_s(scheme, cdf, u) {
            counts[((y * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    chi_square_p_value(&counts, 0, &vec![1.0 / bins as f64; bins])
}

#[test]
fn conjugated_map_preserves_lebesgue() {
    let ulam = UlamCumulative::new(&ulam_invariant_density(&BuiltinScheme::Cf, 512, 1000, 1e-12).unwrap()).unwrap();
    for seed in SEEDS {
        let cases = [
            pushforward_p_value(&BuiltinScheme::Cf, &GaussCumulative, seed),
            pushforward_p_value(&BuiltinScheme::Cf, &ulam, seed),
            pushforward_p_value(&BuiltinScheme::base(2).unwrap(), &Lebesgue, seed),
            pushforward_p_value(&BuiltinScheme::base(5).unwrap(), &Lebesgue, seed),
        ];
        for p in cases {
            assert!(p > 0.001, "seed {seed}: {cases:?}");
        }
    }
}

#[test]
fn gauss_cumulative_matches_ulam() {
    let d = ulam_invariant_density(&BuiltinScheme::Cf, 512, 1000, 1e-12).unwrap();
    let ulam = UlamCumulative::new(&d).unwrap();
    for i in 1..100 {
        let t = i as f64 / 100.0;
        assert!((ulam.cdf(t) - GaussCumulative.cdf(t)).abs() < 1e-3);
        assert!((ulam.inv(ulam.cdf(t)) - t).abs() < 1e-12);
    }
    assert!((d.integral() - 1.0).abs() < 1e-12);
    assert!(d.l1_distance(|x| 1.0 / ((1.0 + x) * LN_2)) < 0.05);
}

#[test]
fn conditions_hold_for_builtin_schemes() {
    for s in schemes() {
        let r = check_conditions(&s, 256, 4).unwrap();
        assert!(r.c2_ok.iter().all(|&ok| ok), "{}: {r:?}", s.name());
        assert!(r.beta >= expansion_floor(256));
    }
    // |T'| reaches 1 at x = 1 for the continued fraction, so one step is not enough
    assert_eq!(check_conditions(&BuiltinScheme::Cf, 256, 4).unwrap().ell, 2);
}
