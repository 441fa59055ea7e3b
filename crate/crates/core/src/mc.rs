//! Monte Carlo plumbing shared by the estimators.
//!
//! Every sample `i` draws from its own ChaCha stream `(seed, i)` and the
//! per-sample results are reduced in index order with pairwise summation,
//! so estimates are bit-identical for any rayon worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub type SampleRng = ChaCha12Rng;

/// RNG for sample `index` of an experiment seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a tag into a seed (splitmix64 finaliser) to separate sub-experiments.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f(i, rng_i)` for `i in 0..samples` on the current rayon pool and
/// returns the results in index order.
pub fn par_samples<T, F>(samples: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SampleRng) -> T + Sync + Send,
{
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, count: 0 };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0, count: 1 };
        }
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Self { mean, stderr: (var / n as f64).sqrt(), count: n }
    }
}

/// Pearson chi-square p-value of `observed` counts against `probs`; the
/// residual probability `1 - sum(probs)` is compared against
/// `overflow` when it is non-negligible.
pub fn chi_square_p_value(observed: &[u64], overflow: u64, probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum::<u64>() + overflow;
    let n = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n * p;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    let rest = 1.0 - probs.iter().sum::<f64>();
    if rest > 1e-12 {
        let e = n * rest;
        stat += (overflow as f64 - e).powi(2) / e;
        cells += 1;
    }
    let dist = ChiSquared::new((cells - 1) as f64).expect("at least two cells");
    1.0 - dist.cdf(stat)
}

/// Two-sample chi-square homogeneity p-value over a `rows x cols` table.
pub fn chi_square_homogeneity(table: &[Vec<u64>]) -> f64 {
    let rows = table.len();
    let cols = table[0].len();
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_tot: Vec<f64> =
        (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let n: f64 = row_tot.iter().sum();
    let mut stat = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_tot[i] * col_tot[j] / n;
            if e > 0.0 {
                stat += (table[i][j] as f64 - e).powi(2) / e;
            }
        }
    }
    let dof = ((rows - 1) * (cols - 1)) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}
