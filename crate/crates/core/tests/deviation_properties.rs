use cfdim::cf::{cylinder, gauss_map, DigitWord, RealPoint};
use cfdim::deviations::*;
use cfdim::mc::derive_seed;
use cfdim::process::{sample_path, DigitLaw, ProcessSpec};
use cfdim::Error;
use proptest::prelude::*;

const SEEDS: [u64; 3] = [1, 42, 1337];

fn word(d: &[u64]) -> DigitWord {
    DigitWord::from_slice(d).unwrap()
}

/// Frequency computed by iterating the Gauss map on the midpoint of the
/// path's cylinder.
fn frequency_by_orbit(path: &DigitWord, a: &DigitWord, q: &SubsequenceSpec, n: usize) -> f64 {
    let target = cylinder(a);
    let mut x = RealPoint::exact(cylinder(path).midpoint()).unwrap();
    let mut orbit = vec![x.value().clone()];
    let last = q.at(n).unwrap() as usize;
    for _ in 0..last {
        x = gauss_map(&x).unwrap();
        orbit.push(x.value().clone());
    }
    let hits = (1..=n).filter(|&i| target.contains(&orbit[q.at(i).unwrap() as usize])).count();
    hits as f64 / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn digits_and_orbit_agree(seed in any::<u64>(), n in 1usize..=20, step in 1u64..=2, a in prop::collection::vec(1u64..=2, 1..=2)) {
        let q = if step == 1 { SubsequenceSpec::identity() } else { SubsequenceSpec::arithmetic(step).unwrap() };
        let a = word(&a);
        let len = q.required_len(n, a.len()).unwrap();
        let path = sample_path(&ProcessSpec::Gauss, len, seed).unwrap().word;
        let from_digits = frequency_average(&path, &a, &q, n).unwrap();
        prop_assert_eq!(from_digits, frequency_by_orbit(&path, &a, &q, n));
    }

    #[test]
    fn arithmetic_uses_exactly_c_n_plus_len(c in 1u64..=6, n in 1usize..=60, alen in 1usize..=3) {
        let q = SubsequenceSpec::arithmetic(c).unwrap();
        let a = DigitWord::repeat(1, alen).unwrap();
        let need = c as usize * n + alen;
        prop_assert_eq!(q.required_len(n, alen).unwrap(), need);
        let enough = DigitWord::repeat(1, need).unwrap();
        prop_assert_eq!(frequency_average(&enough, &a, &q, n).unwrap(), 1.0);
        let short = DigitWord::repeat(1, need - 1).unwrap();
        let is_too_short = matches!(frequency_average(&short, &a, &q, n), Err(Error::PathTooShort { .. }));
        prop_assert!(is_too_short);
    }
}

#[test]
fn probability_nonincreasing_in_delta() {
    let a = word(&[1]);
    for q in [SubsequenceSpec::identity(), SubsequenceSpec::arithmetic(2).unwrap()] {
        for seed in SEEDS {
            let ps: Vec<f64> = [0.0, 0.02, 0.05, 0.1, 0.2, 0.3]
                .iter()
                .map(|&d| deviation_probability_mc(&a, &q, d, 50, 20_000, seed, Estimator::Plain).unwrap().estimate)
                .collect();
            assert!(ps.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {ps:?}");
        }
    }
}

#[test]
fn point_mass_always_deviates() {
    let spec = ProcessSpec::iid(DigitLaw::point_mass(1));
    let e = gamma_mass_empirical(&spec, &word(&[1]), &SubsequenceSpec::identity(), 0.2, 100, 500, 1).unwrap();
    assert_eq!(e.estimate, 1.0);
}

#[test]
fn decay_series_at_every_seed() {
    let a = word(&[1]);
    let ns = [10, 25, 50, 100, 200];
    for q in [SubsequenceSpec::identity(), SubsequenceSpec::arithmetic(2).unwrap()] {
        for seed in SEEDS {
            let s = deviation_series(&a, &q, 0.2, &ns, 100_000, derive_seed(seed, 8), Estimator::Tilted).unwrap();
            let fit = decay_rate_fit(&s).unwrap();
            assert!(fit.slope < 0.0 && fit.r_squared > 0.9, "seed {seed}: {fit:?}");
            assert!(s.strictly_decreasing(), "seed {seed}: {:?}", s.entries);
        }
    }
}

#[test]
fn tilted_and_plain_agree_where_plain_resolves() {
    let a = word(&[1]);
    let q = SubsequenceSpec::identity();
    for seed in SEEDS {
        let plain = deviation_probability_mc(&a, &q, 0.2, 25, 200_000, seed, Estimator::Plain).unwrap();
        let tilted = deviation_probability_mc(&a, &q, 0.2, 25, 200_000, derive_seed(seed, 1), Estimator::Tilted).unwrap();
        let joint = (plain.stderr.powi(2) + tilted.stderr.powi(2)).sqrt();
        assert!((plain.estimate - tilted.estimate).abs() <= 4.0 * joint, "seed {seed}: {plain:?} {tilted:?}");
    }
}
