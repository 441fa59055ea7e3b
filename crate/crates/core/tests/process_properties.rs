use std::collections::HashMap;

use cfdim::cf::DigitWord;
use cfdim::gauss::{all_words, mu_g_cylinder};
use cfdim::mc::{chi_square_homogeneity, substream};
use cfdim::process::*;
use proptest::prelude::*;

const SEEDS: [u64; 3] = [1, 42, 1337];

fn table_chain() -> ProcessSpec {
    ProcessSpec::Markov(MarkovSpec {
        order: 1,
        kernel: Kernel::Table {
            max_digit: 3,
            initial: vec![0.5, 0.3, 0.2],
            rows: vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.2, 0.2], vec![0.1, 0.1, 0.8]],
        },
    })
}

fn geometric_iid() -> ProcessSpec {
    ProcessSpec::iid(DigitLaw::new(vec![0.4, 0.25, 0.15], TailRule::Geometric { ratio: 0.5 }).unwrap())
}

fn specs() -> Vec<ProcessSpec> {
    vec![
        ProcessSpec::Gauss,
        ProcessSpec::gauss_markov(1).unwrap(),
        ProcessSpec::gauss_markov(2).unwrap(),
        geometric_iid(),
        table_chain(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masses_are_consistent(d in prop::collection::vec(1u64..=3, 2..=6), which in 0usize..5) {
        let spec = &specs()[which];
        let w = DigitWord::new(d).unwrap();
        let whole = process_cylinder_mass(spec, &w).unwrap();
        let cap = 2000u64;
        let part: f64 = (1..=cap).map(|c| process_cylinder_mass(spec, &w.extended(c).unwrap()).unwrap()).sum();
        prop_assert!(part <= whole * (1.0 + 1e-12));
        prop_assert!(part >= whole * (1.0 - 2.0 / cap as f64) - 1e-300);
    }

    #[test]
    fn gauss_chain_matches_gauss_up_to_order(d in prop::collection::vec(1u64..=30, 1..=6), extra in 0usize..3) {
        let k = d.len() + extra;
        let spec = ProcessSpec::gauss_markov(k).unwrap();
        let full: Vec<u64> = d.iter().cloned().chain(std::iter::repeat_n(1, extra)).collect();
        let w = DigitWord::new(full).unwrap();
        let chain = process_cylinder_mass(&spec, &w).unwrap();
        let exact = mu_g_cylinder(&w).mass;
        prop_assert!((chain - exact).abs() <= 1e-12 * exact);
        let longer = w.extended(2).unwrap();
        let chain = process_cylinder_mass(&spec, &longer).unwrap();
        let exact = mu_g_cylinder(&longer).mass;
        prop_assert!((chain - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn same_seed_same_path(seed in any::<u64>(), n in 1usize..200) {
        let spec = ProcessSpec::gauss_markov(1).unwrap();
        prop_assert_eq!(sample_path(&spec, n, seed).unwrap(), sample_path(&spec, n, seed).unwrap());
    }
}

#[test]
fn empirical_frequencies_within_four_sigma() {
    let samples = 1_000_000;
    for spec in specs() {
        for seed in SEEDS {
            let mut rng = substream(seed, 7);
            let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
            for _ in 0..samples {
                let (d, _) = spec.sample_with_ln_mass(3, &mut rng);
                for len in 1..=3 {
                    if d[..len].iter().all(|&c| c <= 3) {
                        *counts.entry(d[..len].to_vec()).or_default() += 1;
                    }
                }
            }
            for len in spec.min_len().max(1)..=3 {
                for w in all_words(3, len) {
                    let p = process_cylinder_mass(&spec, &w).unwrap();
                    let got = *counts.get(w.digits()).unwrap_or(&0) as f64 / samples as f64;
                    let sigma = (p * (1.0 - p) / samples as f64).sqrt();
                    assert!(
                        (got - p).abs() <= 4.0 * sigma,
                        "{} seed {seed} word {w}: {got} vs {p}",
                        spec.id()
                    );
                }
            }
        }
    }
}

#[test]
fn gauss_chain_is_shift_stationary() {
    let positions = [1usize, 5, 50];
    let cells = 7;
    for k in [1, 2] {
        let spec = ProcessSpec::gauss_markov(k).unwrap();
        for seed in SEEDS {
            let mut rng = substream(seed, 11);
            let mut table = vec![vec![0u64; cells]; positions.len()];
            for _ in 0..200_000 {
                let (d, _) = spec.sample_with_ln_mass(50, &mut rng);
                for (row, &j) in positions.iter().enumerate() {
                    table[row][(d[j - 1] as usize).min(cells) - 1] += 1;
                }
            }
            let p = chi_square_homogeneity(&table);
            assert!(p > 0.001, "order {k} seed {seed}: p = {p}");
        }
    }
}

#[test]
fn stationarity_residual_within_tail_bound() {
    for k in 1..=3 {
        let spec = build_gauss_markov(k).unwrap();
        for b in all_words(3, k - 1) {
            for d in 1..=3 {
                let r = stationarity_residual(&spec, &b, d, 10_000).unwrap();
                assert!(r.within_bound(), "k {k} b {b} d {d}: {r:?}");
            }
        }
    }
}

#[test]
fn iid_quasi_independence_is_exact() {
    let spec = geometric_iid();
    for u in all_words(4, 2) {
        for v in all_words(4, 2) {
            assert!((psi_ratio(&spec, &u, &v).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
