use cfdim::cf::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use proptest::prelude::*;

fn word(d: Vec<u64>) -> DigitWord {
    DigitWord::new(d).unwrap()
}

/// Fibonacci with F_1 = 1, F_2 = 2.
fn fib(n: usize) -> u128 {
    let (mut a, mut b) = (1u128, 1u128);
    for _ in 0..n {
        let c = a + b;
        a = b;
        b = c;
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn unimodular(d in prop::collection::vec(1u64..=9, 0..=12)) {
        let c = continuants(&word(d));
        prop_assert_eq!(c.determinant().abs(), BigInt::one());
    }

    #[test]
    fn midpoint_roundtrip(d in prop::collection::vec(1u64..=9, 1..=10)) {
        let w = word(d);
        let cyl = cylinder(&w);
        let x = RealPoint::exact(cyl.midpoint()).unwrap();
        prop_assert_eq!(digits_of(&x, w.len()).unwrap(), w);
    }

    #[test]
    fn children_partition_parent(d in prop::collection::vec(1u64..=9, 0..=8), cap in prop::sample::select(vec![10u64, 100, 1000])) {
        let w = word(d);
        let parent = cylinder(&w);
        let mut kids: Vec<CylinderInterval> = (1..=cap).map(|c| cylinder(&w.extended(c).unwrap())).collect();
        kids.sort_by(|a, b| a.low.cmp(&b.low));
        for pair in kids.windows(2) {
            prop_assert!(pair[0].high <= pair[1].low);
        }
        for k in &kids {
            prop_assert!(k.low >= parent.low && k.high <= parent.high);
        }
        let total: f64 = kids.iter().map(|k| k.length().to_f64().unwrap()).sum();
        let len = parent.length().to_f64().unwrap();
        let residual = 1.0 - total / len;
        prop_assert!(residual > 0.0 && residual < 2.0 / cap as f64, "{}", residual);
    }

    #[test]
    fn lengths_bounded_by_all_ones(d in prop::collection::vec(1u64..=20, 1..=15)) {
        let n = d.len();
        let len = cylinder(&word(d)).length();
        let bound = BigRational::new(BigInt::one(), BigInt::from(fib(n) * fib(n + 1)));
        prop_assert!(len <= bound);
    }

    #[test]
    fn gauss_map_shifts_digits(n in 2u64..500, k in 1usize..20) {
        prop_assume!((n as f64).sqrt().fract() != 0.0);
        let x = RealPoint::sqrt_frac(n, 256).unwrap();
        let long = digits_of(&x, k + 1).unwrap();
        let tx = gauss_map(&x).unwrap();
        prop_assert_eq!(digits_of(&tx, k).unwrap(), long.shifted(1));
    }
}

#[test]
fn all_ones_attains_the_supremum() {
    // 1 / (F_n F_{n+1}) with F_1 = 1, F_2 = 2
    for n in 1..=15 {
        let ones = cylinder(&DigitWord::repeat(1, n).unwrap()).length();
        assert_eq!(ones, BigRational::new(BigInt::one(), BigInt::from(fib(n) * fib(n + 1))));
    }
    for n in 1..=8 {
        let best = cfdim::gauss::all_words(4, n).map(|w| cylinder(&w).length()).max().unwrap();
        assert_eq!(best, cylinder(&DigitWord::repeat(1, n).unwrap()).length());
    }
}

#[test]
fn wide_partition_at_ten_thousand() {
    for d in [vec![], vec![1], vec![3, 1, 4, 1, 5, 9, 2, 6]] {
        let w = word(d);
        let cap = 10_000u64;
        let len = cylinder(&w).length().to_f64().unwrap();
        let total: f64 = (1..=cap).map(|c| cylinder(&w.extended(c).unwrap()).length().to_f64().unwrap()).sum();
        let residual = 1.0 - total / len;
        assert!(residual > 0.0 && residual < 2.0 / cap as f64, "{residual}");
    }
}
