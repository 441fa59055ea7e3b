//! Exact continued-fraction arithmetic.
//!
//! Digit words, continuants, cylinder intervals and the Gauss map
//! `x -> 1/x mod 1`. Cylinder geometry is always exact: endpoints are
//! rationals built from the continuant recurrence and never pass through
//! floating point.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Digit = u64;

/// A finite word of continued-fraction digits. The empty word addresses the
/// whole space.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DigitWord(Vec<Digit>);

impl DigitWord {
    pub fn new(digits: Vec<Digit>) -> Result<Self> {
        if let Some(position) = digits.iter().position(|&d| d == 0) {
            return Err(Error::InvalidDigit { position, digit: 0 });
        }
        Ok(Self(digits))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_slice(digits: &[Digit]) -> Result<Self> {
        Self::new(digits.to_vec())
    }

    /// Constant word `d d ... d` of length `len`.
    pub fn repeat(digit: Digit, len: usize) -> Result<Self> {
        Self::new(vec![digit; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digits(&self) -> &[Digit] {
        &self.0
    }

    pub fn into_digits(self) -> Vec<Digit> {
        self.0
    }

    pub fn push(&mut self, digit: Digit) -> Result<()> {
        if digit == 0 {
            return Err(Error::InvalidDigit { position: self.0.len(), digit });
        }
        self.0.push(digit);
        Ok(())
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &DigitWord) -> DigitWord {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        DigitWord(v)
    }

    /// `self` followed by the single digit `digit` (which must be positive).
    pub fn extended(&self, digit: Digit) -> Result<DigitWord> {
        let mut w = self.clone();
        w.push(digit)?;
        Ok(w)
    }

    /// Drops the first `count` digits (the action of `count` Gauss-map steps).
    pub fn shifted(&self, count: usize) -> DigitWord {
        DigitWord(self.0[count.min(self.len())..].to_vec())
    }

    pub fn slice(&self, start: usize, end: usize) -> DigitWord {
        DigitWord(self.0[start..end].to_vec())
    }
}

impl TryFrom<Vec<u64>> for DigitWord {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        DigitWord::new(v)
    }
}

impl From<DigitWord> for Vec<u64> {
    fn from(w: DigitWord) -> Self {
        w.0
    }
}

impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses whitespace- or comma-separated digits. The empty string is the
/// empty word.
impl FromStr for DigitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
        let digits = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|e| Error::DomainError(format!("bad digit {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        DigitWord::new(digits)
    }
}

/// The last two convergent numerators and denominators of a word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuantPair {
    pub p_prev: BigUint,
    pub p_cur: BigUint,
    pub q_prev: BigUint,
    pub q_cur: BigUint,
}

impl ContinuantPair {
    /// Continuants of the empty word: `p_{-1}=1, p_0=0, q_{-1}=0, q_0=1`.
    pub fn seed() -> Self {
        Self {
            p_prev: BigUint::one(),
            p_cur: BigUint::zero(),
            q_prev: BigUint::zero(),
            q_cur: BigUint::one(),
        }
    }

    pub fn push(&mut self, digit: Digit) {
        let p_next = &self.p_cur * digit + &self.p_prev;
        let q_next = &self.q_cur * digit + &self.q_prev;
        self.p_prev = std::mem::replace(&mut self.p_cur, p_next);
        self.q_prev = std::mem::replace(&mut self.q_cur, q_next);
    }

    /// `p_cur*q_prev - p_prev*q_cur`, which is always +1 or -1.
    pub fn determinant(&self) -> BigInt {
        BigInt::from(&self.p_cur * &self.q_prev) - BigInt::from(&self.p_prev * &self.q_cur)
    }

    pub fn convergent(&self) -> BigRational {
        BigRational::new(self.p_cur.clone().into(), self.q_cur.clone().into())
    }
}

pub fn continuants(word: &DigitWord) -> ContinuantPair {
    let mut c = ContinuantPair::seed();
    for &d in word.digits() {
        c.push(d);
    }
    c
}

/// Evaluates `[a_1, ..., a_m] = 1/(a_1 + 1/(a_2 + ... + 1/a_m))` exactly.
pub fn eval_finite_cf(word: &DigitWord) -> Result<BigRational> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let mut acc = BigRational::zero();
    for &d in word.digits().iter().rev() {
        acc = (BigRational::from_integer(d.into()) + acc).recip();
    }
    Ok(acc)
}

/// The cylinder `I_w`: all points whose expansion starts with `w`.
/// Endpoints are stored sorted, so orientation (which alternates with the
/// parity of the depth) is not represented.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderInterval {
    pub low: BigRational,
    pub high: BigRational,
    pub word: DigitWord,
}

impl CylinderInterval {
    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn length(&self) -> BigRational {
        &self.high - &self.low
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.low + &self.high) / BigRational::from_integer(2.into())
    }

    /// Open-interval membership.
    pub fn contains(&self, x: &BigRational) -> bool {
        &self.low < x && x < &self.high
    }

    pub fn contains_interval(&self, lo: &BigRational, hi: &BigRational) -> bool {
        &self.low < lo && hi < &self.high
    }
}

pub fn cylinder(word: &DigitWord) -> CylinderInterval {
    cylinder_from_continuants(&continuants(word), word.clone())
}

pub(crate) fn cylinder_from_continuants(c: &ContinuantPair, word: DigitWord) -> CylinderInterval {
    let a = BigRational::new(c.p_cur.clone().into(), c.q_cur.clone().into());
    let b = BigRational::new(
        (&c.p_cur + &c.p_prev).into(),
        (&c.q_cur + &c.q_prev).into(),
    );
    let (low, high) = if a <= b { (a, b) } else { (b, a) };
    CylinderInterval { low, high, word }
}

/// A point of `(0, 1)`: either an exact rational or a rational centre with a
/// guaranteed absolute error of at most `2^-precision_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealPoint {
    Exact(BigRational),
    Approx { center: BigRational, precision_bits: u32 },
}

impl RealPoint {
    pub fn exact(value: BigRational) -> Result<Self> {
        check_unit_open(&value)?;
        Ok(RealPoint::Exact(value))
    }

    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DomainError("zero denominator".into()));
        }
        Self::exact(BigRational::new(num.into(), den.into()))
    }

    pub fn approx(center: BigRational, precision_bits: u32) -> Result<Self> {
        check_unit_open(&center)?;
        Ok(RealPoint::Approx { center, precision_bits })
    }

    /// An `f64` taken as an approximation with 53 bits of absolute precision.
    pub fn from_f64(x: f64) -> Result<Self> {
        let center = BigRational::from_float(x)
            .ok_or_else(|| Error::DomainError(format!("{x} is not finite")))?;
        Self::approx(center, 53)
    }

    /// The fractional part of `sqrt(n)` to `bits` bits of precision. `n` must
    /// not be a perfect square.
    pub fn sqrt_frac(n: u64, bits: u32) -> Result<Self> {
        let scaled = (BigUint::from(n) << (2 * bits as usize)).sqrt();
        let int = BigUint::from(n).sqrt();
        if &int * &int == BigUint::from(n) {
            return Err(Error::DomainError(format!("{n} is a perfect square")));
        }
        let num = BigInt::from(scaled) - (BigInt::from(int) << bits as usize);
        let center = BigRational::new(num, BigInt::one() << bits as usize);
        // floor(sqrt) loses < 1 ulp, so one extra bit of slack is enough.
        Self::approx(center, bits - 1)
    }

    pub fn value(&self) -> &BigRational {
        match self {
            RealPoint::Exact(v) => v,
            RealPoint::Approx { center, .. } => center,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.value().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.value().is_zero()
    }

    /// Absolute error radius, zero for exact points.
    pub fn radius(&self) -> BigRational {
        match self {
            RealPoint::Exact(_) => BigRational::zero(),
            RealPoint::Approx { precision_bits, .. } => pow2(-(*precision_bits as i64)),
        }
    }
}

fn check_unit_open(v: &BigRational) -> Result<()> {
    if v <= &BigRational::zero() || v >= &BigRational::one() {
        return Err(Error::DomainError(format!("{v} not in (0, 1)")));
    }
    Ok(())
}

pub(crate) fn pow2(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}

/// `floor(log2(r))` for a positive rational.
pub(crate) fn floor_log2(r: &BigRational) -> i64 {
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let mut e = nb - db;
    // 2^e <= r < 2^(e+1) after at most one correction step
    if r < &pow2(e) {
        e -= 1;
    }
    e
}

/// The first `n` digits of `x`.
///
/// Exact points are expanded by the Euclidean algorithm. For approximate
/// points, digit `i` is emitted only when the cylinder of the first `i`
/// digits is longer than `2^(32-P)` and contains the whole error ball
/// around the centre, so every emitted digit is certified.
pub fn digits_of(x: &RealPoint, n: usize) -> Result<DigitWord> {
    match x {
        RealPoint::Exact(v) => exact_digits(v, n),
        RealPoint::Approx { center, precision_bits } => {
            certified_digits(center, *precision_bits, n)
        }
    }
}

fn exact_digits(v: &BigRational, n: usize) -> Result<DigitWord> {
    let mut r = v.clone();
    let mut out = Vec::with_capacity(n);
    for emitted in 0..n {
        if r.is_zero() {
            return Err(Error::RationalTermination { emitted });
        }
        let inv = r.recip();
        let d = inv.to_integer();
        r = inv - BigRational::from_integer(d.clone());
        out.push(d.to_u64().ok_or(Error::DomainError("digit overflows u64".into()))?);
    }
    Ok(DigitWord(out))
}

fn certified_digits(center: &BigRational, bits: u32, n: usize) -> Result<DigitWord> {
    let eps = pow2(-(bits as i64));
    let lo = center - &eps;
    let hi = center + &eps;
    let budget = pow2(32 - bits as i64);
    let mut cont = ContinuantPair::seed();
    let mut r = center.clone();
    let mut word = DigitWord::empty();
    for emitted in 0..n {
        if r.is_zero() {
            return Err(Error::PrecisionExhausted { emitted });
        }
        let inv = r.recip();
        let d = inv.to_integer();
        r = inv - BigRational::from_integer(d.clone());
        let d = d.to_u64().ok_or(Error::PrecisionExhausted { emitted })?;
        cont.push(d);
        word.0.push(d);
        let cyl = cylinder_from_continuants(&cont, DigitWord::empty());
        if cyl.length() <= budget || !cyl.contains_interval(&lo, &hi) {
            return Err(Error::PrecisionExhausted { emitted });
        }
    }
    Ok(word)
}

/// `T x = 1/x mod 1`. Exact on rationals; a zero result marks a
/// terminating orbit. For approximate points the error radius is
/// propagated and the result carries the reduced precision.
pub fn gauss_map(x: &RealPoint) -> Result<RealPoint> {
    match x {
        RealPoint::Exact(v) => {
            if v.is_zero() {
                return Err(Error::UndefinedAtZero);
            }
            let inv = v.recip();
            Ok(RealPoint::Exact(inv.fract()))
        }
        RealPoint::Approx { center, precision_bits } => {
            if center.is_zero() {
                return Err(Error::UndefinedAtZero);
            }
            let eps = pow2(-(*precision_bits as i64));
            let lo = center - &eps;
            if lo <= BigRational::zero() {
                return Err(Error::PrecisionExhausted { emitted: 0 });
            }
            // |1/x - 1/c| <= eps / (c (c - eps)) on the error ball
            let eps_out = &eps / (center * &lo);
            let inv = center.recip();
            let floor_lo = (&inv - &eps_out).floor();
            let floor_hi = (&inv + &eps_out).floor();
            if floor_lo != floor_hi {
                return Err(Error::PrecisionExhausted { emitted: 0 });
            }
            let bits = -floor_log2(&eps_out) - 1;
            if bits <= 0 {
                return Err(Error::PrecisionExhausted { emitted: 0 });
            }
            Ok(RealPoint::Approx { center: inv.fract(), precision_bits: bits as u32 })
        }
    }
}

/// Natural log of a positive big integer, accurate to f64 precision for any
/// size.
pub(crate) fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln |I_w|` computed from the continuants, usable at any depth.
pub fn ln_cylinder_length(word: &DigitWord) -> f64 {
    let c = continuants(word);
    let sum = &c.q_cur + &c.q_prev;
    -(ln_biguint(&c.q_cur) + ln_biguint(&sum))
}

/// `ln |I_w|` from the ratios `q_{i-1}/q_i`, which follow `r -> 1/(a + r)`;
/// linear in the depth and accurate to a few ulps per digit.
pub fn ln_cylinder_length_f64(digits: &[Digit]) -> f64 {
    let mut r = 0.0;
    let mut acc = 0.0;
    for &d in digits {
        r = 1.0 / (d as f64 + r);
        acc += r.ln();
    }
    2.0 * acc - r.ln_1p()
}

#[cfg(test)]
fn gcd_is_one(r: &BigRational) -> bool {
    num_integer::Integer::gcd(r.numer(), r.denom()).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(d: &[u64]) -> DigitWord {
        DigitWord::from_slice(d).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn finite_cf_values() {
        assert_eq!(eval_finite_cf(&w(&[2])).unwrap(), q(1, 2));
        assert_eq!(eval_finite_cf(&w(&[1, 1, 1])).unwrap(), q(2, 3));
        assert_eq!(eval_finite_cf(&w(&[2, 3])).unwrap(), q(3, 7));
        assert_eq!(eval_finite_cf(&DigitWord::empty()), Err(Error::EmptyWord));
        assert!(gcd_is_one(&eval_finite_cf(&w(&[7, 1, 4, 2])).unwrap()));
    }

    #[test]
    fn continuant_examples() {
        let c = continuants(&w(&[1]));
        assert_eq!(
            (c.p_prev, c.p_cur, c.q_prev, c.q_cur),
            (0u32.into(), 1u32.into(), 1u32.into(), 1u32.into())
        );
        let c = continuants(&w(&[1, 1]));
        assert_eq!(
            (c.p_prev, c.p_cur, c.q_prev, c.q_cur),
            (1u32.into(), 1u32.into(), 1u32.into(), 2u32.into())
        );
        let c = continuants(&w(&[2, 3]));
        assert_eq!(c.convergent(), eval_finite_cf(&w(&[2, 3])).unwrap());
        assert_eq!((c.p_cur, c.q_cur), (3u32.into(), 7u32.into()));
    }

    /// Brute-force membership: x has first digits `word` iff iterating the
    /// map on x reproduces them.
    fn brute_in_cylinder(x: &BigRational, word: &[u64]) -> bool {
        let mut r = x.clone();
        for &d in word {
            if r.is_zero() {
                return false;
            }
            let inv = r.recip();
            if inv.to_integer() != BigInt::from(d) {
                return false;
            }
            r = inv.fract();
        }
        true
    }

    #[test]
    fn cylinder_examples() {
        let c = cylinder(&w(&[1]));
        assert_eq!((c.low.clone(), c.high.clone()), (q(1, 2), q(1, 1)));
        assert_eq!(c.length(), q(1, 2));
        let c = cylinder(&w(&[2]));
        assert_eq!((c.low.clone(), c.high.clone()), (q(1, 3), q(1, 2)));
        assert_eq!(c.length(), q(1, 6));
        let c = cylinder(&w(&[1, 1]));
        assert_eq!((c.low.clone(), c.high.clone()), (q(1, 2), q(2, 3)));
        assert_eq!(c.length(), q(1, 6));
        let c = cylinder(&DigitWord::empty());
        assert_eq!((c.low, c.high), (q(0, 1), q(1, 1)));
        // I_12 is (2/3, 3/4)
        let c = cylinder(&w(&[1, 2]));
        assert_eq!((c.low.clone(), c.high.clone()), (q(2, 3), q(3, 4)));

        // brute-force oracle over a rational grid
        for word in [vec![1], vec![2], vec![1, 1], vec![3, 1, 2]] {
            let cyl = cylinder(&w(&word));
            for k in 1..400 {
                let x = q(k, 401);
                assert_eq!(cyl.contains(&x), brute_in_cylinder(&x, &word) && x != cyl.low && x != cyl.high,
                    "word {word:?} x={x}");
            }
        }
    }

    #[test]
    fn cylinder_length_formula() {
        for word in [vec![1], vec![5, 2], vec![1, 1, 1, 1], vec![9, 3, 7, 1, 2]] {
            let word = w(&word);
            let c = continuants(&word);
            let expect = BigRational::new(
                BigInt::one(),
                BigInt::from(&c.q_cur * (&c.q_cur + &c.q_prev)),
            );
            assert_eq!(cylinder(&word).length(), expect);
            let ln = ln_cylinder_length(&word);
            assert!((ln - expect.to_f64().unwrap().ln()).abs() < 1e-12);
            assert!((ln_cylinder_length_f64(word.digits()) - ln).abs() < 1e-12);
        }
        let long: Vec<u64> = (0..3000).map(|i| 1 + (i * 7 % 13) as u64).collect();
        let exact = ln_cylinder_length(&w(&long));
        assert!((ln_cylinder_length_f64(&long) - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn digits_of_rationals() {
        let x = RealPoint::ratio(2, 3).unwrap();
        assert_eq!(digits_of(&x, 2).unwrap(), w(&[1, 2]));
        assert_eq!(digits_of(&x, 3), Err(Error::RationalTermination { emitted: 2 }));
        let half = RealPoint::ratio(1, 2).unwrap();
        assert_eq!(digits_of(&half, 1).unwrap(), w(&[2]));
        assert_eq!(digits_of(&half, 2), Err(Error::RationalTermination { emitted: 1 }));
    }

    #[test]
    fn digits_of_sqrt2() {
        let x = RealPoint::sqrt_frac(2, 256).unwrap();
        assert_eq!(digits_of(&x, 5).unwrap(), w(&[2, 2, 2, 2, 2]));
        // 256 bits certify a long run of 2s but not unboundedly many
        assert_eq!(digits_of(&x, 80).unwrap(), DigitWord::repeat(2, 80).unwrap());
        assert!(matches!(digits_of(&x, 200), Err(Error::PrecisionExhausted { .. })));
    }

    #[test]
    fn f64_points_are_budgeted() {
        let x = RealPoint::from_f64(0.1234567).unwrap();
        let err = digits_of(&x, 60).unwrap_err();
        let Error::PrecisionExhausted { emitted } = err else { panic!("{err:?}") };
        assert!((3..20).contains(&emitted), "{emitted}");
        let prefix = digits_of(&x, emitted).unwrap();
        assert!(cylinder(&prefix).contains(x.value()));
    }

    #[test]
    fn gauss_map_examples() {
        let t = |n, d| gauss_map(&RealPoint::ratio(n, d).unwrap()).unwrap();
        assert_eq!(t(2, 3), RealPoint::Exact(q(1, 2)));
        assert_eq!(t(1, 3), RealPoint::Exact(q(0, 1)));
        assert!(t(1, 3).is_zero());
        assert_eq!(t(2, 5), RealPoint::Exact(q(1, 2)));
        assert_eq!(gauss_map(&RealPoint::Exact(q(0, 1))), Err(Error::UndefinedAtZero));
    }

    #[test]
    fn real_point_domain() {
        assert!(RealPoint::ratio(0, 1).is_err());
        assert!(RealPoint::ratio(1, 1).is_err());
        assert!(RealPoint::ratio(3, 2).is_err());
        assert!(RealPoint::sqrt_frac(4, 64).is_err());
    }

    #[test]
    fn word_parsing() {
        assert_eq!("1 2 3".parse::<DigitWord>().unwrap(), w(&[1, 2, 3]));
        assert_eq!("[1,2]".parse::<DigitWord>().unwrap(), w(&[1, 2]));
        assert_eq!("".parse::<DigitWord>().unwrap(), DigitWord::empty());
        assert!("1 0".parse::<DigitWord>().is_err());
        let json = serde_json::to_string(&w(&[4, 1])).unwrap();
        assert_eq!(json, "[4,1]");
        assert!(serde_json::from_str::<DigitWord>("[1,0]").is_err());
        assert_eq!(w(&[3, 1, 4]).to_string(), "3 1 4");
    }
}
