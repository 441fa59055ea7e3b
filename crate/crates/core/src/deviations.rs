//! Digit frequencies along subsequences and the probability that they
//! deviate from their Gauss-measure value.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cf::{Digit, DigitWord};
use crate::error::{Error, Result};
use crate::gauss::{ln_mu_g_cylinder, GaussConditional};
use crate::mc::{derive_seed, par_samples, pairwise_sum, MeanEstimate};
use crate::process::ProcessSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsequenceKind {
    Identity,
    Arithmetic { step: u64 },
    Explicit { values: Vec<u64> },
}

/// A strictly increasing `q: {1, 2, ...} -> N` with a witness `L > 1` for
/// `liminf q(n)/n < L`. For explicit lists the witness only speaks about
/// the stored prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceSpec {
    #[serde(flatten)]
    pub kind: SubsequenceKind,
    pub l_witness: f64,
}

impl SubsequenceSpec {
    pub fn identity() -> Self {
        Self { kind: SubsequenceKind::Identity, l_witness: 2.0 }
    }

    pub fn arithmetic(step: u64) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidSpec("arithmetic step must be >= 1".into()));
        }
        Ok(Self { kind: SubsequenceKind::Arithmetic { step }, l_witness: step as f64 + 1.0 })
    }

    pub fn explicit(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("explicit subsequence must be nonempty and strictly increasing".into()));
        }
        let ratio = values
            .iter()
            .enumerate()
            .map(|(i, &v)| v as f64 / (i + 1) as f64)
            .fold(f64::INFINITY, f64::min);
        Ok(Self { kind: SubsequenceKind::Explicit { values }, l_witness: ratio.max(1.0) + 1.0 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_witness > 1.0) {
            return Err(Error::InvalidSpec("L witness must exceed 1".into()));
        }
        match &self.kind {
            SubsequenceKind::Arithmetic { step: 0 } => {
                Err(Error::InvalidSpec("arithmetic step must be >= 1".into()))
            }
            SubsequenceKind::Explicit { values } => Self::explicit(values.clone()).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// `q(i)` for `i >= 1`.
    pub fn at(&self, i: usize) -> Result<u64> {
        match &self.kind {
            SubsequenceKind::Identity => Ok(i as u64),
            SubsequenceKind::Arithmetic { step } => Ok(step * i as u64),
            SubsequenceKind::Explicit { values } => values
                .get(i - 1)
                .copied()
                .ok_or_else(|| Error::DomainError(format!("explicit subsequence has no term {i}"))),
        }
    }

    /// Digits needed to evaluate `n` terms for a pattern of length `len`.
    pub fn required_len(&self, n: usize, len: usize) -> Result<usize> {
        Ok(self.at(n)? as usize + len)
    }
}

/// `(1/n) sum_{i<=n} 1_a(T^{q(i)} x)`, read off the digits: `T^j x` lies in
/// `I_a` iff digits `j+1, ..., j+|a|` equal `a`.
pub fn frequency_average(path: &DigitWord, a: &DigitWord, q: &SubsequenceSpec, n: usize) -> Result<f64> {
    Ok(count_hits(path.digits(), a.digits(), q, n)? as f64 / n as f64)
}

fn count_hits(path: &[Digit], a: &[Digit], q: &SubsequenceSpec, n: usize) -> Result<usize> {
    if a.is_empty() {
        return Err(Error::EmptyWord);
    }
    if n == 0 {
        return Err(Error::DomainError("n must be >= 1".into()));
    }
    let needed = q.required_len(n, a.len())?;
    if path.len() < needed {
        return Err(Error::PathTooShort { len: path.len(), needed });
    }
    let mut hits = 0;
    for i in 1..=n {
        let j = q.at(i)? as usize;
        if &path[j..j + a.len()] == a {
            hits += 1;
        }
    }
    Ok(hits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Fraction of sampled paths in the event.
    Plain,
    /// Importance sampling from a defensive mixture of the Gauss law and
    /// two exponentially tilted versions of it.
    Tilted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationEntry {
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Sampled paths that landed in the event.
    pub hits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub word: DigitWord,
    pub delta: f64,
    pub q: SubsequenceSpec,
    pub estimator: Estimator,
    pub entries: Vec<DeviationEntry>,
}

impl DeviationSeries {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "estimate", "stderr", "samples"]).unwrap();
        for e in &self.entries {
            w.write_record([e.n.to_string(), e.estimate.to_string(), e.stderr.to_string(), e.samples.to_string()])
                .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].estimate < w[0].estimate)
    }
}

fn check_args(a: &DigitWord, q: &SubsequenceSpec, delta: f64, n: usize, samples: usize) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyWord);
    }
    q.validate()?;
    if !(delta >= 0.0) {
        return Err(Error::DomainError("delta must be >= 0".into()));
    }
    if n == 0 || samples == 0 {
        return Err(Error::DomainError("n and samples must be >= 1".into()));
    }
    Ok(())
}

fn binomial_entry(n: usize, hits: usize, samples: usize) -> DeviationEntry {
    let p = hits as f64 / samples as f64;
    DeviationEntry { n, estimate: p, stderr: (p * (1.0 - p) / samples as f64).sqrt(), samples, hits }
}

/// Fraction of `ν`-sampled paths whose frequency of `a` along `q` differs
/// from `μ_G(I_a)` by more than `δ` at time `n`. This is a finite-`n` proxy
/// for the mass of the liminf deviation set, not the set itself.
pub fn gamma_mass_empirical(
    spec: &ProcessSpec,
    a: &DigitWord,
    q: &SubsequenceSpec,
    delta: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<DeviationEntry> {
    check_args(a, q, delta, n, samples)?;
    spec.validate()?;
    let target = ln_mu_g_cylinder(a).exp();
    let len = q.required_len(n, a.len())?.max(spec.min_len());
    let flags = par_samples(samples, seed, |_, rng| {
        let (digits, _) = spec.sample_with_ln_mass(len, rng);
        let hits = count_hits(&digits, a.digits(), q, n).expect("path long enough");
        (hits as f64 / n as f64 - target).abs() > delta
    });
    Ok(binomial_entry(n, flags.iter().filter(|&&f| f).count(), samples))
}

/// Mixture weight of the untilted Gauss law in the tilted estimator.
const DEFENSIVE: f64 = 0.2;

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Probability under `μ_G` of `|freq - μ_G(I_a)| > δ` at time `n`.
pub fn deviation_probability_mc(
    a: &DigitWord,
    q: &SubsequenceSpec,
    delta: f64,
    n: usize,
    samples: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<DeviationEntry> {
    match estimator {
        Estimator::Plain => gamma_mass_empirical(&ProcessSpec::Gauss, a, q, delta, n, samples, seed),
        Estimator::Tilted => tilted_probability(a, q, delta, n, samples, seed),
    }
}

/// At the first digit of every window `q(i)+1` the proposal moves
/// `P(digit = a_1 | past)` by a fixed log-odds shift `θ`; components are
/// `θ = 0` (weight 0.2) and shifts aimed at the two edges of the event.
/// Each path is weighted by `ν / Σ_j w_j q_j`.
fn tilted_probability(
    a: &DigitWord,
    q: &SubsequenceSpec,
    delta: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<DeviationEntry> {
    check_args(a, q, delta, n, samples)?;
    let ad = a.digits();
    let target = ln_mu_g_cylinder(a).exp();
    let first = GaussConditional::new().prob(ad[0]);
    let shift = |goal: f64| {
        let p1 = (first * goal / target).clamp(1e-3, 1.0 - 1e-3);
        logit(p1) - logit(first)
    };
    let thetas = [0.0, shift(target + delta), shift(target - delta)];
    let weights = [DEFENSIVE, (1.0 - DEFENSIVE) / 2.0, (1.0 - DEFENSIVE) / 2.0];
    let len = q.required_len(n, ad.len())?;
    let mut tilted = vec![false; len];
    for i in 1..=n {
        tilted[q.at(i)? as usize] = true;
    }
    let results = par_samples(samples, seed, |_, rng| {
        let pick: f64 = rng.random();
        let comp = if pick < weights[0] { 0 } else if pick < weights[0] + weights[1] { 1 } else { 2 };
        let mut law = GaussConditional::new();
        let mut digits = Vec::with_capacity(len);
        // ln(q_j / ν) for each component
        let mut ln_ratio = [0.0f64; 3];
        for &t in &tilted {
            let d = if t {
                let p = law.prob(ad[0]);
                let tp: Vec<f64> = thetas.iter().map(|th| sigmoid(logit(p) + th)).collect();
                let hit = rng.random::<f64>() < tp[comp];
                for j in 0..3 {
                    ln_ratio[j] += if hit { (tp[j] / p).ln() } else { ((1.0 - tp[j]) / (1.0 - p)).ln() };
                }
                if hit {
                    ad[0]
                } else {
                    loop {
                        let c = law.sample_digit(rng);
                        if c != ad[0] {
                            break c;
                        }
                    }
                }
            } else {
                law.sample_digit(rng)
            };
            law.push(d);
            digits.push(d);
        }
        let hits = count_hits(&digits, ad, q, n).expect("path long enough");
        let inside = (hits as f64 / n as f64 - target).abs() > delta;
        if !inside {
            return (0.0, false);
        }
        let m = ln_ratio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mix: f64 = weights.iter().zip(&ln_ratio).map(|(w, l)| w * (l - m).exp()).sum();
        ((-m - mix.ln()).exp(), true)
    });
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let est = MeanEstimate::from_samples(&values);
    let hits = results.iter().filter(|r| r.1).count();
    Ok(DeviationEntry { n, estimate: est.mean, stderr: est.stderr, samples, hits })
}

/// Deviation probabilities at each `n`, with an independent stream per `n`.
pub fn deviation_series(
    a: &DigitWord,
    q: &SubsequenceSpec,
    delta: f64,
    ns: &[usize],
    samples: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<DeviationSeries> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DomainError("n values must be strictly increasing".into()));
    }
    let entries = ns
        .iter()
        .map(|&n| deviation_probability_mc(a, q, delta, n, samples, derive_seed(seed, n as u64), estimator))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationSeries { word: a.clone(), delta, q: q.clone(), estimator, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub points: usize,
}

/// Entries with fewer hits are too noisy to fit on a log scale.
pub const MIN_FIT_HITS: usize = 10;

/// Least squares of `ln p` against `n` over entries with a positive
/// estimate and at least ten hits.
pub fn decay_rate_fit(series: &DeviationSeries) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .entries
        .iter()
        .filter(|e| e.estimate > 0.0 && e.hits >= MIN_FIT_HITS)
        .map(|e| (e.n as f64, e.estimate.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable entries, need 3", pts.len())));
    }
    let m = pts.len() as f64;
    let mx = pairwise_sum(&pts.iter().map(|p| p.0).collect::<Vec<_>>()) / m;
    let my = pairwise_sum(&pts.iter().map(|p| p.1).collect::<Vec<_>>()) / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|(_, y)| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all n values equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let ns: Vec<usize> = series.entries.iter().filter(|e| e.estimate > 0.0 && e.hits >= MIN_FIT_HITS).map(|e| e.n).collect();
    Ok(DecayFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        n_min: ns[0],
        n_max: *ns.last().unwrap(),
        points: pts.len(),
    })
}
