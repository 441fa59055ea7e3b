//! Digit processes: independent digits with index-dependent laws, explicit
//! k-step Markov chains, and the k-step chain whose transition
//! probabilities are read off the Gauss measure.

use std::f64::consts::LN_2;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cf::{cylinder, Digit, DigitWord};
use crate::error::{Error, Result};
use crate::gauss::{ln_mu_g_cylinder, mu_g_cylinder, GaussConditional};
use crate::mc::{pairwise_sum, substream};

const SUM_TOL: f64 = 1e-12;

/// How probability beyond the explicit masses is spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TailRule {
    /// No mass beyond the explicit digits; masses must sum to one.
    Zero,
    /// The remaining mass `t` goes to `D + j` with probability
    /// `t (1 - ratio) ratio^(j-1)`, `j >= 1`.
    Geometric { ratio: f64 },
}

/// A law on the positive integers: explicit masses for digits `1..=D`
/// plus a tail rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitLaw {
    pub masses: Vec<f64>,
    pub tail: TailRule,
}

impl DigitLaw {
    pub fn new(masses: Vec<f64>, tail: TailRule) -> Result<Self> {
        let law = Self { masses, tail };
        law.validate()?;
        Ok(law)
    }

    pub fn uniform(max_digit: usize) -> Self {
        Self::new(vec![1.0 / max_digit as f64; max_digit], TailRule::Zero).expect("uniform law")
    }

    pub fn point_mass(digit: Digit) -> Self {
        let mut masses = vec![0.0; digit as usize];
        masses[digit as usize - 1] = 1.0;
        Self { masses, tail: TailRule::Zero }
    }

    pub fn validate(&self) -> Result<()> {
        if self.masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidSpec("masses must be finite and non-negative".into()));
        }
        let sum: f64 = self.masses.iter().sum();
        match self.tail {
            TailRule::Zero if (sum - 1.0).abs() > SUM_TOL => {
                Err(Error::InvalidSpec(format!("masses sum to {sum}, expected 1")))
            }
            TailRule::Geometric { ratio } if !(0.0..1.0).contains(&ratio) => {
                Err(Error::InvalidSpec(format!("geometric ratio {ratio} outside [0, 1)")))
            }
            TailRule::Geometric { .. } if sum > 1.0 + SUM_TOL => {
                Err(Error::InvalidSpec(format!("masses sum to {sum} > 1")))
            }
            _ => Ok(()),
        }
    }

    pub fn max_explicit(&self) -> usize {
        self.masses.len()
    }

    pub fn tail_mass(&self) -> f64 {
        match self.tail {
            TailRule::Zero => 0.0,
            TailRule::Geometric { .. } => (1.0 - self.masses.iter().sum::<f64>()).max(0.0),
        }
    }

    pub fn prob(&self, c: Digit) -> f64 {
        let d = self.masses.len() as u64;
        if c == 0 {
            0.0
        } else if c <= d {
            self.masses[c as usize - 1]
        } else {
            match self.tail {
                TailRule::Zero => 0.0,
                TailRule::Geometric { ratio } => {
                    self.tail_mass() * (1.0 - ratio) * ratio.powi((c - d - 1) as i32)
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Digit {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 1;
        for (i, &m) in self.masses.iter().enumerate() {
            acc += m;
            if m > 0.0 {
                last_positive = i as Digit + 1;
            }
            if u < acc {
                return i as Digit + 1;
            }
        }
        match self.tail {
            TailRule::Geometric { ratio } if self.tail_mass() > 0.0 => {
                let d = self.masses.len() as Digit;
                if ratio == 0.0 {
                    return d + 1;
                }
                let v = 1.0 - rng.random::<f64>();
                d + 1 + (v.ln() / ratio.ln()).floor() as Digit
            }
            // rounding left u just above the cumulative sum
            _ => last_positive,
        }
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> Result<f64> {
        let mut h: f64 = self.masses.iter().filter(|&&m| m > 0.0).map(|&m| -m * m.ln()).sum();
        let t = self.tail_mass();
        if let TailRule::Geometric { ratio } = self.tail {
            if t > 0.0 {
                if !(0.0..1.0).contains(&ratio) {
                    return Err(Error::InfiniteEntropy);
                }
                h -= t * (t * (1.0 - ratio)).ln();
                if ratio > 0.0 {
                    h -= t * ratio.ln() * ratio / (1.0 - ratio);
                }
            }
        }
        if !h.is_finite() {
            return Err(Error::InfiniteEntropy);
        }
        Ok(h)
    }

    /// `E[ln A]`.
    pub fn mean_log(&self) -> Result<f64> {
        let mut acc: f64 =
            self.masses.iter().enumerate().map(|(i, &m)| m * ((i + 1) as f64).ln()).sum();
        let t = self.tail_mass();
        if let TailRule::Geometric { ratio } = self.tail {
            if t > 0.0 {
                if !(0.0..1.0).contains(&ratio) {
                    return Err(Error::InfiniteLogMoment);
                }
                let d = self.masses.len() as f64;
                let mut w = t * (1.0 - ratio);
                let mut j = 1.0;
                while w > 1e-20 * t {
                    acc += w * (d + j).ln();
                    w *= ratio;
                    j += 1.0;
                }
            }
        }
        if !acc.is_finite() {
            return Err(Error::InfiniteLogMoment);
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Index `i` uses `laws[min(i, len) - 1]`.
    #[default]
    HoldLast,
    /// Index `i` uses `laws[(i - 1) % len]`.
    Cycle,
}

/// Independent digits, digit `i` drawn from its own law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IidSpec {
    pub laws: Vec<DigitLaw>,
    #[serde(default)]
    pub schedule: Schedule,
}

impl IidSpec {
    pub fn stationary(law: DigitLaw) -> Self {
        Self { laws: vec![law], schedule: Schedule::HoldLast }
    }

    /// Law of the digit at 1-based `index`.
    pub fn law_at(&self, index: usize) -> &DigitLaw {
        let n = self.laws.len();
        match self.schedule {
            Schedule::HoldLast => &self.laws[index.min(n) - 1],
            Schedule::Cycle => &self.laws[(index - 1) % n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.laws.is_empty() {
            return Err(Error::InvalidSpec("an i.i.d. spec needs at least one law".into()));
        }
        self.laws.iter().try_for_each(DigitLaw::validate)
    }
}

/// Transition structure of a k-step chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `p_a = μ(I_a)` and `p_{a,c} = μ(I_ac) / μ(I_a)` in closed form, no
    /// truncation of the alphabet.
    Gauss,
    /// Digits `1..=max_digit`; `initial` and `rows` are indexed by states in
    /// lexicographic order, each row holding `max_digit` probabilities.
    Table { max_digit: u64, initial: Vec<f64>, rows: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovSpec {
    pub order: usize,
    pub kernel: Kernel,
}

fn state_index(state: &[Digit], max_digit: u64) -> Option<usize> {
    let mut idx = 0usize;
    for &d in state {
        if d == 0 || d > max_digit {
            return None;
        }
        idx = idx * max_digit as usize + (d - 1) as usize;
    }
    Some(idx)
}

fn sample_from(probs: &[f64], u: f64) -> Digit {
    let mut acc = 0.0;
    let mut last = 1;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if p > 0.0 {
            last = i as Digit + 1;
        }
        if u < acc {
            return i as Digit + 1;
        }
    }
    last
}

impl MarkovSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidSpec("markov order must be >= 1".into()));
        }
        if let Kernel::Table { max_digit, initial, rows } = &self.kernel {
            let states = (*max_digit as usize)
                .checked_pow(self.order as u32)
                .ok_or_else(|| Error::InvalidSpec("state space too large".into()))?;
            if initial.len() != states || rows.len() != states {
                return Err(Error::InvalidSpec(format!(
                    "expected {states} states, got initial {} rows {}",
                    initial.len(),
                    rows.len()
                )));
            }
            let check = |v: &[f64], what: &str| -> Result<()> {
                if v.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::InvalidSpec(format!("{what} has a bad entry")));
                }
                let s: f64 = v.iter().sum();
                if (s - 1.0).abs() > SUM_TOL {
                    return Err(Error::InvalidSpec(format!("{what} sums to {s}")));
                }
                Ok(())
            };
            check(initial, "initial distribution")?;
            for (i, row) in rows.iter().enumerate() {
                if row.len() != *max_digit as usize {
                    return Err(Error::InvalidSpec(format!("row {i} has wrong width")));
                }
                check(row, &format!("row {i}"))?;
            }
        }
        Ok(())
    }

    /// `P(A_1..A_k = state)`.
    pub fn initial_prob(&self, state: &[Digit]) -> f64 {
        debug_assert_eq!(state.len(), self.order);
        match &self.kernel {
            Kernel::Gauss => {
                mu_g_cylinder(&DigitWord::from_slice(state).expect("positive digits")).mass
            }
            Kernel::Table { max_digit, initial, .. } => {
                state_index(state, *max_digit).map_or(0.0, |i| initial[i])
            }
        }
    }

    /// `p_{a,c}`: probability of digit `c` after state `a` (length `order`).
    pub fn transition_prob(&self, state: &[Digit], c: Digit) -> f64 {
        match &self.kernel {
            Kernel::Gauss => GaussConditional::after(state).prob(c),
            Kernel::Table { max_digit, rows, .. } => {
                if c == 0 || c > *max_digit {
                    return 0.0;
                }
                state_index(state, *max_digit).map_or(0.0, |i| rows[i][c as usize - 1])
            }
        }
    }
}

pub fn build_gauss_markov(order: usize) -> Result<MarkovSpec> {
    let spec = MarkovSpec { order, kernel: Kernel::Gauss };
    spec.validate()?;
    Ok(spec)
}

/// Any digit process the estimators can sample and evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// The Gauss measure itself.
    Gauss,
    Iid(IidSpec),
    Markov(MarkovSpec),
}

impl ProcessSpec {
    pub fn gauss_markov(order: usize) -> Result<Self> {
        Ok(ProcessSpec::Markov(build_gauss_markov(order)?))
    }

    pub fn iid(law: DigitLaw) -> Self {
        ProcessSpec::Iid(IidSpec::stationary(law))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Gauss => Ok(()),
            ProcessSpec::Iid(s) => s.validate(),
            ProcessSpec::Markov(m) => m.validate(),
        }
    }

    /// Short label used in exported paths.
    pub fn id(&self) -> String {
        match self {
            ProcessSpec::Gauss => "gauss".into(),
            ProcessSpec::Iid(s) => format!("iid[{}]", s.laws.len()),
            ProcessSpec::Markov(MarkovSpec { order, kernel: Kernel::Gauss }) => {
                format!("gauss_markov({order})")
            }
            ProcessSpec::Markov(MarkovSpec { order, kernel: Kernel::Table { max_digit, .. } }) => {
                format!("markov_table({order},{max_digit})")
            }
        }
    }

    /// Minimum word length for which cylinder masses are defined.
    pub fn min_len(&self) -> usize {
        match self {
            ProcessSpec::Markov(m) => m.order,
            _ => 0,
        }
    }

    /// Draws `n` digits and returns them with `ln ν(I_word)`.
    pub fn sample_with_ln_mass<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Vec<Digit>, f64) {
        let mut digits = Vec::with_capacity(n);
        let mut ln_mass = 0.0;
        match self {
            ProcessSpec::Gauss => {
                let mut law = GaussConditional::new();
                for _ in 0..n {
                    let d = law.sample_digit(rng);
                    ln_mass += law.prob(d).ln();
                    law.push(d);
                    digits.push(d);
                }
            }
            ProcessSpec::Iid(spec) => {
                for i in 1..=n {
                    let law = spec.law_at(i);
                    let d = law.sample(rng);
                    ln_mass += law.prob(d).ln();
                    digits.push(d);
                }
            }
            ProcessSpec::Markov(m) => {
                let k = m.order;
                match &m.kernel {
                    Kernel::Gauss => {
                        let mut law = GaussConditional::new();
                        for i in 0..n {
                            if i >= k {
                                law = GaussConditional::after(&digits[i - k..i]);
                            }
                            let d = law.sample_digit(rng);
                            ln_mass += law.prob(d).ln();
                            if i < k {
                                law.push(d);
                            }
                            digits.push(d);
                        }
                    }
                    Kernel::Table { max_digit, initial, rows } => {
                        let u: f64 = rng.random();
                        let s = sample_from(initial, u) as usize - 1;
                        ln_mass += initial[s].ln();
                        // decode the lexicographic state index
                        let mut state = vec![0; k];
                        let mut idx = s;
                        for slot in state.iter_mut().rev() {
                            *slot = (idx % *max_digit as usize) as Digit + 1;
                            idx /= *max_digit as usize;
                        }
                        digits.extend(state.iter().take(n));
                        for i in k..n {
                            let row = &rows[state_index(&digits[i - k..i], *max_digit).unwrap()];
                            let d = sample_from(row, rng.random());
                            ln_mass += row[d as usize - 1].ln();
                            digits.push(d);
                        }
                    }
                }
            }
        }
        (digits, ln_mass)
    }
}

/// A sampled digit prefix with the seed that reproduces it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitPath {
    pub word: DigitWord,
    pub seed: u64,
    pub process: String,
}

impl DigitPath {
    /// Whitespace-separated digits.
    pub fn export(&self) -> String {
        self.word.to_string()
    }
}

/// Draws a path of `n` digits. The same `(spec, n, seed)` always yields the
/// same path.
pub fn sample_path(spec: &ProcessSpec, n: usize, seed: u64) -> Result<DigitPath> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::DomainError("path length must be >= 1".into()));
    }
    if n < spec.min_len() {
        return Err(Error::DomainError(format!("path length {n} below chain order")));
    }
    let mut rng = substream(seed, 0);
    let (digits, _) = spec.sample_with_ln_mass(n, &mut rng);
    Ok(DigitPath { word: DigitWord::new(digits)?, seed, process: spec.id() })
}

/// `ln ν(I_w)`; `-inf` when the mass is zero.
pub fn ln_process_cylinder_mass(spec: &ProcessSpec, w: &DigitWord) -> Result<f64> {
    let d = w.digits();
    match spec {
        ProcessSpec::Gauss => Ok(ln_mu_g_cylinder(w)),
        ProcessSpec::Iid(s) => {
            Ok(d.iter().enumerate().map(|(i, &c)| s.law_at(i + 1).prob(c).ln()).sum())
        }
        ProcessSpec::Markov(m) => {
            let k = m.order;
            if d.len() < k {
                return Err(Error::DomainError(format!(
                    "word length {} below chain order {k}",
                    d.len()
                )));
            }
            let head = match m.kernel {
                Kernel::Gauss => ln_mu_g_cylinder(&w.slice(0, k)),
                Kernel::Table { .. } => m.initial_prob(&d[..k]).ln(),
            };
            Ok(head + (k..d.len()).map(|i| m.transition_prob(&d[i - k..i], d[i]).ln()).sum::<f64>())
        }
    }
}

/// `ν(I_w) = P(A_1..A_|w| = w)`. For chains this is the initial mass of the
/// first `k` digits times the kernel entries along the word.
pub fn process_cylinder_mass(spec: &ProcessSpec, w: &DigitWord) -> Result<f64> {
    let d = w.digits();
    match spec {
        ProcessSpec::Gauss => Ok(mu_g_cylinder(w).mass),
        ProcessSpec::Iid(s) => Ok(d.iter().enumerate().map(|(i, &c)| s.law_at(i + 1).prob(c)).product()),
        ProcessSpec::Markov(m) => {
            let k = m.order;
            if d.len() < k {
                return Err(Error::DomainError(format!(
                    "word length {} below chain order {k}",
                    d.len()
                )));
            }
            let mut mass = m.initial_prob(&d[..k]);
            for i in k..d.len() {
                mass *= m.transition_prob(&d[i - k..i], d[i]);
            }
            Ok(mass)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityCheck {
    /// `|sum_{c<=C} p_{cb} p_{cb,d} - p_{bd}|`.
    pub residual: f64,
    /// Upper bound on the neglected terms `c > C`.
    pub tail_bound: f64,
    pub partial_sum: f64,
    pub target: f64,
    pub cap: u64,
}

impl StationarityCheck {
    pub fn within_bound(&self) -> bool {
        self.residual <= self.tail_bound
    }
}

fn gauss_order(spec: &MarkovSpec) -> Result<usize> {
    match spec.kernel {
        Kernel::Gauss => Ok(spec.order),
        Kernel::Table { .. } => Err(Error::InvalidSpec("expected the Gauss-derived chain".into())),
    }
}

/// Checks `sum_c p_{cb} p_{cb,d} = p_{bd}` for the Gauss chain, truncated
/// at `c <= cap`. The neglected terms are the Gauss mass of points in
/// `T^{-1} I_bd` with first digit above the cap, which is at most
/// `min(μ(0, 1/(C+1)), |I_bd| / (C ln 2))`.
pub fn stationarity_residual(
    spec: &MarkovSpec,
    b: &DigitWord,
    d: Digit,
    cap: u64,
) -> Result<StationarityCheck> {
    let k = gauss_order(spec)?;
    if b.len() + 1 != k {
        return Err(Error::DomainError(format!("|b| must be {} for order {k}", k - 1)));
    }
    if cap == 0 || d == 0 {
        return Err(Error::DomainError("cap and digit must be positive".into()));
    }
    let terms: Vec<f64> = (1..=cap)
        .map(|c| {
            let cb = DigitWord::from_slice(&[c]).unwrap().concat(b);
            spec.initial_prob(cb.digits()) * spec.transition_prob(cb.digits(), d)
        })
        .collect();
    let partial_sum = pairwise_sum(&terms);
    let bd = b.extended(d)?;
    let target = mu_g_cylinder(&bd).mass;
    let len_bd = cylinder(&bd).length().to_f64().unwrap_or(0.0);
    let c = cap as f64;
    let tail_bound = (1.0 / (c + 1.0)).ln_1p().min(len_bd / c) / LN_2;
    Ok(StationarityCheck {
        residual: (partial_sum - target).abs(),
        tail_bound,
        partial_sum,
        target,
        cap,
    })
}

/// `R = P(A_1..A_{l+m} = uv) / (P(A_1..A_l = u) P(A_1..A_m = v))`.
pub fn psi_ratio(spec: &ProcessSpec, u: &DigitWord, v: &DigitWord) -> Result<f64> {
    let k = spec.min_len();
    if u.len() <= k || v.len() <= k {
        return Err(Error::DomainError(format!("words must be longer than the order {k}")));
    }
    let ln = ln_process_cylinder_mass(spec, &u.concat(v))?
        - ln_process_cylinder_mass(spec, u)?
        - ln_process_cylinder_mass(spec, v)?;
    Ok(ln.exp())
}

/// Exact Gauss mass of a rational interval, re-exported for callers that
/// only hold process specs.
pub fn gauss_interval_mass(low: &BigRational, high: &BigRational) -> Result<f64> {
    Ok(crate::gauss::mu_g_interval(low, high)?.mass)
}
