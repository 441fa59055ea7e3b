//! The Gauss measure `dμ = dx / ((1 + x) ln 2)`.
//!
//! Interval masses are single logarithms of exact rationals. Deep cylinders
//! and samplers use [`GaussConditional`], the law of `T^n x` given the first
//! `n` digits, which depends on the prefix only through two continuant
//! ratios and so never needs big integers.

use std::f64::consts::LN_2;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::UBig;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cf::{cylinder, Digit, DigitWord};
use crate::error::{Error, Result};

/// Working precision for measure values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    Bits(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub mass: f64,
    pub precision: Precision,
}

type HpFloat = FBig<HalfEven>;

fn rational_to_hp(r: &BigRational, bits: usize) -> HpFloat {
    let num = UBig::from_le_bytes(&r.numer().magnitude().to_bytes_le());
    let den = UBig::from_le_bytes(&r.denom().magnitude().to_bytes_le());
    let v = HpFloat::from(num).with_precision(bits).value()
        / HpFloat::from(den).with_precision(bits).value();
    if r.is_negative() {
        -v
    } else {
        v
    }
}

fn check_bounds(low: &BigRational, high: &BigRational) -> Result<()> {
    if low.is_negative() || high > &BigRational::one() || low > high {
        return Err(Error::DomainError(format!("interval ({low}, {high}) not inside [0, 1]")));
    }
    Ok(())
}

/// `log2((1 + high) / (1 + low))` as `ln_1p` of an exact ratio, so tiny
/// intervals keep full relative accuracy.
pub fn mu_g_interval(low: &BigRational, high: &BigRational) -> Result<MeasureValue> {
    check_bounds(low, high)?;
    let ratio = (high - low) / (BigRational::one() + low);
    let mass = ratio.to_f64().unwrap_or(0.0).ln_1p() / LN_2;
    Ok(MeasureValue { mass, precision: Precision::Double })
}

pub fn mu_g_interval_with(
    low: &BigRational,
    high: &BigRational,
    precision: Precision,
) -> Result<MeasureValue> {
    match precision {
        Precision::Double => mu_g_interval(low, high),
        Precision::Bits(bits) => {
            check_bounds(low, high)?;
            let mass = hp_interval(low, high, bits as usize).to_f64().value();
            Ok(MeasureValue { mass, precision })
        }
    }
}

fn hp_interval(low: &BigRational, high: &BigRational, bits: usize) -> HpFloat {
    let work = bits + 16;
    let ratio = (high - low) / (BigRational::one() + low);
    let two = HpFloat::from(2u8).with_precision(work).value();
    rational_to_hp(&ratio, work).ln_1p() / two.ln()
}

pub fn mu_g_cylinder(word: &DigitWord) -> MeasureValue {
    if word.is_empty() {
        return MeasureValue { mass: 1.0, precision: Precision::Double };
    }
    let c = cylinder(word);
    mu_g_interval(&c.low, &c.high).expect("cylinders lie in [0, 1]")
}

pub fn mu_g_cylinder_with(word: &DigitWord, precision: Precision) -> MeasureValue {
    let c = cylinder(word);
    mu_g_interval_with(&c.low, &c.high, precision).expect("cylinders lie in [0, 1]")
}

/// Conditional law of the next digit (and of the remaining tail `T^n x`)
/// given a digit prefix, under the Gauss measure.
///
/// With continuants `p_n, q_n` of the prefix, `x = (p_n + t p_{n-1}) /
/// (q_n + t q_{n-1})` and the tail `t` has density proportional to
/// `1 / ((1 + r1 t)(1 + r2 t))` where `r1 = q_{n-1}/q_n` and
/// `r2 = (p_{n-1}+q_{n-1})/(p_n+q_n)`. Appending digit `c` maps both
/// ratios through `r -> 1/(c + r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussConditional {
    r1: f64,
    r2: f64,
}

impl Default for GaussConditional {
    fn default() -> Self {
        Self::new()
    }
}

/// `ln(1+d)/d`, continuous at zero.
fn log1p_over(d: f64) -> f64 {
    if d.abs() < 1e-8 {
        1.0 - d / 2.0 + d * d / 3.0
    } else {
        d.ln_1p() / d
    }
}

impl GaussConditional {
    /// Law of the first digit.
    pub fn new() -> Self {
        Self { r1: 0.0, r2: 1.0 }
    }

    pub fn after(prefix: &[Digit]) -> Self {
        let mut s = Self::new();
        for &d in prefix {
            s.push(d);
        }
        s
    }

    pub fn push(&mut self, digit: Digit) {
        let c = digit as f64;
        self.r1 = 1.0 / (c + self.r1);
        self.r2 = 1.0 / (c + self.r2);
    }

    /// `q_{n-1} / q_n` for the current prefix.
    pub fn denominator_ratio(&self) -> f64 {
        self.r1
    }

    /// Unnormalised tail mass of `(s0, s1)`, `0 <= s0 <= s1 <= 1`.
    pub fn tail_mass(&self, s0: f64, s1: f64) -> f64 {
        self.mass_with_width(s0, s1, s1 - s0)
    }

    fn mass_with_width(&self, s0: f64, s1: f64, width: f64) -> f64 {
        let a = (1.0 + self.r2 * s1) * (1.0 + self.r1 * s0);
        let base = width / a;
        base * log1p_over((self.r1 - self.r2) * base)
    }

    pub fn total(&self) -> f64 {
        self.tail_mass(0.0, 1.0)
    }

    /// `P(next digit = c | prefix)`.
    pub fn prob(&self, c: Digit) -> f64 {
        let cf = c as f64;
        self.mass_with_width(1.0 / (cf + 1.0), 1.0 / cf, 1.0 / (cf * (cf + 1.0))) / self.total()
    }

    /// `P(next digit > c | prefix)`.
    pub fn prob_greater(&self, c: Digit) -> f64 {
        if c == 0 {
            return 1.0;
        }
        self.tail_mass(0.0, 1.0 / (c as f64 + 1.0)) / self.total()
    }

    /// Inverse-CDF draw of the next digit: galloping then bisection on the
    /// closed-form tail probabilities.
    pub fn sample_digit<R: Rng + ?Sized>(&self, rng: &mut R) -> Digit {
        let v = 1.0 - rng.random::<f64>();
        self.digit_for(v)
    }

    /// Smallest `c >= 1` with `P(next > c) <= v`, `v` in `(0, 1]`.
    pub fn digit_for(&self, v: f64) -> Digit {
        let total = self.total();
        let tail = |c: Digit| self.tail_mass(0.0, 1.0 / (c as f64 + 1.0)) / total;
        if tail(1) <= v {
            return 1;
        }
        let mut lo: Digit = 1; // tail(lo) > v
        let mut hi: Digit = 2;
        while tail(hi) > v {
            lo = hi;
            hi = hi.saturating_mul(2);
            if hi == Digit::MAX {
                return hi;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if tail(mid) > v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Draws the tail `T^n x` itself, by closed-form inversion.
    pub fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = rng.random::<f64>();
        let target = v * self.total();
        let y = target * (self.r1 - self.r2);
        let scale = if y.abs() < 1e-12 { 1.0 + y / 2.0 } else { y.exp_m1() / y };
        let e = scale * target;
        (e / (1.0 - self.r2 * e)).clamp(f64::MIN_POSITIVE, 1.0)
    }
}

/// `ln μ_G(I_w)` by telescoping the conditional digit probabilities; valid
/// at depths where the mass itself underflows.
pub fn ln_mu_g_cylinder(word: &DigitWord) -> f64 {
    let mut law = GaussConditional::new();
    let mut acc = 0.0;
    for &d in word.digits() {
        acc += law.prob(d).ln();
        law.push(d);
    }
    acc
}

/// Draws `(α_1, ..., α_n)` under the Gauss measure, digit by digit from the
/// exact conditional laws. The alphabet is never truncated.
pub fn sample_mu_g_digits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DigitWord {
    let mut law = GaussConditional::new();
    let mut digits = Vec::with_capacity(n);
    for _ in 0..n {
        let d = law.sample_digit(rng);
        law.push(d);
        digits.push(d);
    }
    DigitWord::new(digits).expect("sampled digits are positive")
}

/// `μ(I_uv) / (μ(I_u) μ(I_v))`.
pub fn quasi_independence_ratio(u: &DigitWord, v: &DigitWord) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptyWord);
    }
    let ln = ln_mu_g_cylinder(&u.concat(v)) - ln_mu_g_cylinder(u) - ln_mu_g_cylinder(v);
    Ok(ln.exp())
}

/// A witness that the Gauss digits are not a Markov chain of order `|a|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovDefectWitness {
    pub b: DigitWord,
    pub a: DigitWord,
    pub c: Digit,
    pub defect: f64,
}

/// `|μ(I_bac) - μ(I_ac) μ(I_ba) / μ(I_a)|`; `a` may be empty.
pub fn markov_defect(b: &DigitWord, a: &DigitWord, c: Digit) -> Result<MarkovDefectWitness> {
    markov_defect_with(b, a, c, Precision::Double)
}

pub fn markov_defect_with(
    b: &DigitWord,
    a: &DigitWord,
    c: Digit,
    precision: Precision,
) -> Result<MarkovDefectWitness> {
    let ac = a.extended(c)?;
    let ba = b.concat(a);
    let bac = ba.extended(c)?;
    let defect = match precision {
        Precision::Double => {
            let m = |w: &DigitWord| mu_g_cylinder(w).mass;
            (m(&bac) - m(&ac) * m(&ba) / m(a)).abs()
        }
        Precision::Bits(bits) => {
            let m = |w: &DigitWord| {
                let cyl = cylinder(w);
                hp_interval(&cyl.low, &cyl.high, bits as usize)
            };
            let d = m(&bac) - m(&ac) * m(&ba) / m(a);
            d.to_f64().value().abs()
        }
    };
    Ok(MarkovDefectWitness { b: b.clone(), a: a.clone(), c, defect })
}

/// Defects below this are indistinguishable from rounding in f64.
pub const DEFECT_FLOOR: f64 = 1e-13;

/// Lexicographic enumeration of `{1..=max_digit}^len`.
pub fn all_words(max_digit: Digit, len: usize) -> impl Iterator<Item = DigitWord> {
    let total = (max_digit as usize).checked_pow(len as u32).expect("word space too large");
    (0..total).map(move |mut idx| {
        let mut digits = vec![1; len];
        for slot in digits.iter_mut().rev() {
            *slot = 1 + (idx % max_digit as usize) as Digit;
            idx /= max_digit as usize;
        }
        DigitWord::new(digits).expect("positive digits")
    })
}

/// Exhaustive scan over `b` in `{1..D}^m` (`m <= max_m`), `a` in `{1..D}^k`
/// and `c` in `{1..D}`, returning the largest defect. Ties keep the
/// lexicographically first `(m, b, a, c)`.
pub fn find_markov_witness(k: usize, max_digit: Digit, max_m: usize) -> Result<MarkovDefectWitness> {
    if max_digit == 0 || max_m == 0 {
        return Err(Error::DomainError("need max_digit >= 1 and max_m >= 1".into()));
    }
    let mut best: Option<MarkovDefectWitness> = None;
    for m in 1..=max_m {
        for b in all_words(max_digit, m) {
            for a in all_words(max_digit, k) {
                for c in 1..=max_digit {
                    let w = markov_defect(&b, &a, c)?;
                    if best.as_ref().is_none_or(|cur| w.defect > cur.defect) {
                        best = Some(w);
                    }
                }
            }
        }
    }
    match best {
        Some(w) if w.defect > DEFECT_FLOOR => Ok(w),
        _ => Err(Error::NoWitnessFound),
    }
}

/// Exact Gauss mass of a closed-form interval, exposed for density checks.
pub fn density_ratio(low: &BigRational, high: &BigRational) -> Result<f64> {
    let len = (high - low).to_f64().unwrap_or(0.0);
    if len.is_zero() {
        return Err(Error::DomainError("empty interval".into()));
    }
    Ok(mu_g_interval(low, high)?.mass / len)
}
