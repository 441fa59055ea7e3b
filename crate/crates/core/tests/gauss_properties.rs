use std::f64::consts::LN_2;

use cfdim::cf::{cylinder, DigitWord};
use cfdim::gauss::*;
use cfdim::mc::{chi_square_p_value, substream};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

const SEEDS: [u64; 3] = [1, 42, 1337];

fn word(d: Vec<u64>) -> DigitWord {
    DigitWord::new(d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn additive_over_last_digit(d in prop::collection::vec(1u64..=9, 0..=6)) {
        let w = word(d);
        let whole = mu_g_cylinder(&w).mass;
        let cap = 1000;
        let part: f64 = (1..=cap).map(|c| mu_g_cylinder(&w.extended(c).unwrap()).mass).sum();
        prop_assert!(part <= whole * (1.0 + 1e-12));
        prop_assert!(part >= whole * (1.0 - 2.0 / cap as f64));
    }

    #[test]
    fn invariant_under_the_shift(d in prop::collection::vec(1u64..=9, 1..=5)) {
        let w = word(d);
        let whole = mu_g_cylinder(&w).mass;
        let cap = 2000u64;
        let part: f64 = (1..=cap)
            .map(|c| mu_g_cylinder(&DigitWord::from_slice(&[c]).unwrap().concat(&w)).mass)
            .sum();
        let tail = cylinder(&w).length().to_f64().unwrap() / (cap as f64 * LN_2);
        prop_assert!(whole - part >= -1e-15 && whole - part <= tail, "{} {}", whole - part, tail);
    }

    #[test]
    fn density_between_bounds(a in 0u64..1000, b in 0u64..1000, den in 1000u64..100_000) {
        prop_assume!(a != b);
        let (lo, hi) = (a.min(b), a.max(b));
        let low = BigRational::new(lo.into(), den.into());
        let high = BigRational::new(hi.into(), den.into());
        let r = density_ratio(&low, &high).unwrap();
        prop_assert!((1.0 / (2.0 * LN_2) - 1e-12..=1.0 / LN_2 + 1e-12).contains(&r), "{}", r);
    }
}

#[test]
fn first_digit_sampler_chi_square() {
    let law = GaussConditional::new();
    let probs: Vec<f64> = (1..=8).map(|c| law.prob(c)).collect();
    for seed in SEEDS {
        let mut rng = substream(seed, 0);
        let mut counts = [0u64; 8];
        let mut over = 0;
        for _ in 0..1_000_000 {
            match law.sample_digit(&mut rng) {
                c @ 1..=8 => counts[c as usize - 1] += 1,
                _ => over += 1,
            }
        }
        let p = chi_square_p_value(&counts, over, &probs);
        assert!(p > 0.001, "seed {seed}: p = {p}");
    }
}

#[test]
fn deep_words_sampler_matches_masses() {
    for seed in SEEDS {
        let mut rng = substream(seed, 1);
        let n = 200_000;
        let target = word(vec![1, 2]);
        let hits = (0..n).filter(|_| sample_mu_g_digits(2, &mut rng) == target).count();
        let p = mu_g_cylinder(&target).mass;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * sigma);
    }
}

#[test]
fn log_mass_agrees_with_exact_mass() {
    for w in all_words(4, 4) {
        let exact = mu_g_cylinder(&w).mass.ln();
        assert!((ln_mu_g_cylinder(&w) - exact).abs() < 1e-12);
    }
}
