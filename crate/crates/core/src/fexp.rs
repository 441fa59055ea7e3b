//! Generic f-expansions `x = f(a_1 + f(a_2 + ...))`: digits, the shift map
//! `T x = f^{-1}(x) mod 1`, regularity checks, Ulam estimates of the
//! invariant density, and the conjugated map `S = F ∘ T ∘ F^{-1}` whose
//! linearity on branches decides whether the digits can be Markov.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::cf::{digits_of, pow2, RealPoint};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// An expansion generated by a strictly monotone `f`. Increasing schemes
/// satisfy `f(0) = 0`, `f(M) = 1`; decreasing ones `f(1) = 1`,
/// `f(M + 1) = 0`.
pub trait ExpansionScheme: Send + Sync {
    fn name(&self) -> String;
    fn direction(&self) -> Direction;
    /// `M`, or `None` when there are infinitely many branches.
    fn branch_bound(&self) -> Option<u64>;
    fn f(&self, t: f64) -> f64;
    fn f_inv(&self, x: f64) -> f64;

    fn f_exact(&self, _t: &BigRational) -> Option<BigRational> {
        None
    }

    fn f_inv_exact(&self, _x: &BigRational) -> Option<BigRational> {
        None
    }

    fn is_digit(&self, a: u64) -> bool;

    /// Smallest digit.
    fn first_digit(&self) -> u64;

    /// Whether `sup_x sum_{Ty=x} |T'(y)|^{-t}` is finite for some `t < 1`.
    /// Recorded, not checked.
    fn preimage_sum_finite(&self) -> bool {
        false
    }

    /// The branch interval `f(a, a+1)`, sorted.
    fn branch(&self, a: u64) -> Result<(f64, f64)> {
        if !self.is_digit(a) {
            return Err(Error::BranchOutOfRange(a));
        }
        let (u, v) = (self.f(a as f64), self.f(a as f64 + 1.0));
        Ok((u.min(v), u.max(v)))
    }

    /// For infinite schemes: total length of the preimages of `[s0, s1]`
    /// through all branches `a >= from`, and an interval containing them.
    fn tail_preimage(&self, _from: u64, _s0: f64, _s1: f64) -> Option<(f64, (f64, f64))> {
        None
    }

    /// First `n` digits of `x`. The default works in `f64` and tracks the
    /// propagated error through a finite-difference derivative.
    fn digits(&self, x: &RealPoint, n: usize) -> Result<Vec<u64>> {
        float_digits(self, x, n)
    }
}

fn float_digits<S: ExpansionScheme + ?Sized>(s: &S, x: &RealPoint, n: usize) -> Result<Vec<u64>> {
    let mut r = x.to_f64();
    let mut err = x.radius().to_f64().unwrap_or(0.0).max(r * f64::EPSILON);
    let mut out = Vec::with_capacity(n);
    for emitted in 0..n {
        if r == 0.0 {
            return Err(Error::OrbitHitsZero { emitted });
        }
        let y = s.f_inv(r);
        let h = (r.min(1.0 - r) * 1e-4).max(1e-12);
        let slope = ((s.f_inv(r + h) - s.f_inv(r - h)) / (2.0 * h)).abs();
        let e = err * slope + 4.0 * y.abs() * f64::EPSILON;
        let d = y.floor();
        if y - d <= e || d + 1.0 - y <= e {
            return Err(Error::PrecisionExhausted { emitted });
        }
        out.push(d as u64);
        r = y - d;
        err = e;
    }
    Ok(out)
}

/// Exact digits through `f_inv_exact`, on a rational point or an error ball.
fn exact_digits<S: ExpansionScheme + ?Sized>(s: &S, x: &RealPoint, n: usize) -> Result<Vec<u64>> {
    let inv = |v: &BigRational| s.f_inv_exact(v).expect("scheme has exact inverse");
    let mut out = Vec::with_capacity(n);
    match x {
        RealPoint::Exact(v) => {
            let mut r = v.clone();
            for emitted in 0..n {
                if r.is_zero() {
                    return Err(Error::OrbitHitsZero { emitted });
                }
                let y = inv(&r);
                let d = y.floor();
                r = &y - &d;
                out.push(d.to_integer().to_u64().ok_or(Error::DomainError("digit overflow".into()))?);
            }
        }
        RealPoint::Approx { center, precision_bits } => {
            let eps = pow2(-(*precision_bits as i64));
            let mut lo = center - &eps;
            let mut hi = center + &eps;
            for emitted in 0..n {
                if lo <= BigRational::zero() || hi >= BigRational::one() {
                    return Err(Error::PrecisionExhausted { emitted });
                }
                let (a, b) = (inv(&lo), inv(&hi));
                let (ylo, yhi) = if a <= b { (a, b) } else { (b, a) };
                let d = ylo.floor();
                if ylo == d || yhi >= &d + BigRational::one() {
                    return Err(Error::PrecisionExhausted { emitted });
                }
                lo = ylo - &d;
                hi = yhi - &d;
                out.push(d.to_integer().to_u64().ok_or(Error::PrecisionExhausted { emitted })?);
            }
        }
    }
    Ok(out)
}

/// The schemes describable in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BuiltinScheme {
    /// `f(t) = 1/t`: continued fractions.
    #[serde(rename = "cf")]
    Cf,
    /// `f(t) = t/M`: base-M digits.
    #[serde(rename = "base-m")]
    BaseM { m: u64 },
}

impl BuiltinScheme {
    pub fn base(m: u64) -> Result<Self> {
        let s = BuiltinScheme::BaseM { m };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BuiltinScheme::BaseM { m } if *m < 2 => Err(Error::InvalidSpec("base must be >= 2".into())),
            _ => Ok(()),
        }
    }
}

impl ExpansionScheme for BuiltinScheme {
    fn name(&self) -> String {
        match self {
            BuiltinScheme::Cf => "cf".into(),
            BuiltinScheme::BaseM { m } => format!("base-{m}"),
        }
    }

    fn direction(&self) -> Direction {
        match self {
            BuiltinScheme::Cf => Direction::Decreasing,
            BuiltinScheme::BaseM { .. } => Direction::Increasing,
        }
    }

    fn branch_bound(&self) -> Option<u64> {
        match self {
            BuiltinScheme::Cf => None,
            BuiltinScheme::BaseM { m } => Some(*m),
        }
    }

    fn f(&self, t: f64) -> f64 {
        match self {
            BuiltinScheme::Cf => 1.0 / t,
            BuiltinScheme::BaseM { m } => t / *m as f64,
        }
    }

    fn f_inv(&self, x: f64) -> f64 {
        match self {
            BuiltinScheme::Cf => 1.0 / x,
            BuiltinScheme::BaseM { m } => x * *m as f64,
        }
    }

    fn f_exact(&self, t: &BigRational) -> Option<BigRational> {
        Some(match self {
            BuiltinScheme::Cf => t.recip(),
            BuiltinScheme::BaseM { m } => t / BigRational::from_integer((*m).into()),
        })
    }

    fn f_inv_exact(&self, x: &BigRational) -> Option<BigRational> {
        Some(match self {
            BuiltinScheme::Cf => x.recip(),
            BuiltinScheme::BaseM { m } => x * BigRational::from_integer((*m).into()),
        })
    }

    fn is_digit(&self, a: u64) -> bool {
        match self {
            BuiltinScheme::Cf => a >= 1,
            BuiltinScheme::BaseM { m } => a < *m,
        }
    }

    fn first_digit(&self) -> u64 {
        match self {
            BuiltinScheme::Cf => 1,
            BuiltinScheme::BaseM { .. } => 0,
        }
    }

    fn preimage_sum_finite(&self) -> bool {
        true
    }

    fn tail_preimage(&self, from: u64, s0: f64, s1: f64) -> Option<(f64, (f64, f64))> {
        match self {
            // sum_{a>=A} (1/(a+s0) - 1/(a+s1)) = ψ(A+s1) - ψ(A+s0)
            BuiltinScheme::Cf => {
                let a = from as f64;
                Some((digamma(a + s1) - digamma(a + s0), (0.0, 1.0 / a)))
            }
            BuiltinScheme::BaseM { .. } => None,
        }
    }

    fn digits(&self, x: &RealPoint, n: usize) -> Result<Vec<u64>> {
        match self {
            BuiltinScheme::Cf => match digits_of(x, n) {
                Ok(w) => Ok(w.into_digits()),
                Err(Error::RationalTermination { emitted }) => Err(Error::OrbitHitsZero { emitted }),
                Err(e) => Err(e),
            },
            BuiltinScheme::BaseM { .. } => exact_digits(self, x, n),
        }
    }
}

/// `α_i(x) = floor(f^{-1}(r_{i-1}))`, `r_i = frac(f^{-1}(r_{i-1}))`.
pub fn digits_f<S: ExpansionScheme + ?Sized>(scheme: &S, x: &RealPoint, n: usize) -> Result<Vec<u64>> {
    scheme.digits(x, n)
}

/// The closure of the cylinder of `word`: all `f(a_1 + f(a_2 + ... f(a_n + t)))`
/// for `t` in `[0, 1]`. Exact when the scheme has an exact `f`.
pub fn reconstruct_f<S: ExpansionScheme + ?Sized>(scheme: &S, word: &[u64]) -> Result<(BigRational, BigRational)> {
    for (position, &digit) in word.iter().enumerate() {
        if !scheme.is_digit(digit) {
            return Err(Error::InvalidDigit { position, digit });
        }
    }
    let eval = |t0: BigRational| -> BigRational {
        let mut t = t0;
        for &a in word.iter().rev() {
            let arg = BigRational::from_integer(a.into()) + &t;
            t = match scheme.f_exact(&arg) {
                Some(v) => v,
                None => BigRational::from_float(scheme.f(arg.to_f64().unwrap())).unwrap(),
            };
        }
        t
    };
    let (u, v) = (eval(BigRational::zero()), eval(BigRational::one()));
    Ok(if u <= v { (u, v) } else { (v, u) })
}

/// `T x = f^{-1}(x) - floor(f^{-1}(x))`.
pub fn t_map_f<S: ExpansionScheme + ?Sized>(scheme: &S, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::DomainError(format!("{x} not in (0, 1)")));
    }
    let y = scheme.f_inv(x);
    let d = y.floor();
    if y == d {
        return Err(Error::UndefinedAtBranchEnd);
    }
    Ok(y - d)
}

/// Exact `T` on rationals for schemes with an exact inverse.
pub fn t_map_exact<S: ExpansionScheme + ?Sized>(scheme: &S, x: &BigRational) -> Result<BigRational> {
    let y = scheme
        .f_inv_exact(x)
        .ok_or_else(|| Error::DomainError("scheme has no exact inverse".into()))?;
    let fr = y.fract();
    if fr.is_zero() {
        return Err(Error::UndefinedAtBranchEnd);
    }
    Ok(fr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Branches checked; for infinite schemes the first `branch_cap`.
    pub branches: Vec<u64>,
    pub branch_cap: Option<u64>,
    /// Bounded, finite second differences on each checked branch.
    pub c2_ok: Vec<bool>,
    pub ell: usize,
    /// Grid minimum of `|(T^ell)'|`.
    pub beta: f64,
    /// Grid estimate of `max |T''(x) / (T'(y) T'(z))|` over triples in one
    /// branch.
    pub distortion: f64,
    /// `max(1, distortion)`, a valid distortion constant whenever the
    /// estimate is.
    pub distortion_bound: f64,
    pub grid: usize,
    pub preimage_sum_finite: bool,
}

/// Branches examined for schemes with infinitely many.
pub const DEFAULT_BRANCH_CAP: u64 = 64;

/// Minimum accepted `|(T^ell)'|`. The grid minimum of `|T'|` over-estimates
/// the infimum by `O(1/grid)`, so maps that only reach 1 at a branch end
/// must not pass at `ell = 1`.
pub fn expansion_floor(grid: usize) -> f64 {
    1.0 + 8.0 / grid as f64
}

/// Finite-difference checks of smoothness, eventual expansion and bounded
/// distortion on a grid of `grid` points per branch.
pub fn check_conditions<S: ExpansionScheme + ?Sized>(scheme: &S, grid: usize, ell_max: usize) -> Result<ConditionReport> {
    if grid < 8 || ell_max == 0 {
        return Err(Error::DomainError("grid must be >= 8 and ell_max >= 1".into()));
    }
    let first = scheme.first_digit();
    let (last, cap) = match scheme.branch_bound() {
        Some(m) => (if scheme.direction() == Direction::Increasing { m - 1 } else { m }, None),
        None => (first + DEFAULT_BRANCH_CAP - 1, Some(DEFAULT_BRANCH_CAP)),
    };
    let branches: Vec<u64> = (first..=last).filter(|&a| scheme.is_digit(a)).collect();
    let mut c2_ok = Vec::with_capacity(branches.len());
    let mut distortion: f64 = 0.0;
    for &a in &branches {
        let (lo, hi) = scheme.branch(a)?;
        let w = hi - lo;
        let h = w / (4.0 * grid as f64);
        let t = |x: f64| scheme.f_inv(x) - a as f64;
        let mut ok = true;
        let (mut max_dd, mut min_d) = (0.0f64, f64::INFINITY);
        for i in 0..grid {
            let x = lo + w * (i as f64 + 0.5) / grid as f64;
            let d1 = (t(x + h) - t(x - h)) / (2.0 * h);
            let d2 = (t(x + h) - 2.0 * t(x) + t(x - h)) / (h * h);
            if !d1.is_finite() || !d2.is_finite() {
                ok = false;
            }
            max_dd = max_dd.max(d2.abs());
            min_d = min_d.min(d1.abs());
        }
        // second differences of an affine map are pure rounding noise
        if max_dd * h * h <= 64.0 * f64::EPSILON * t(lo + w / 2.0).abs().max(1.0) {
            max_dd = 0.0;
        }
        c2_ok.push(ok);
        if ok && min_d > 0.0 {
            distortion = distortion.max(max_dd / (min_d * min_d));
        }
    }
    if let Some(i) = c2_ok.iter().position(|ok| !ok) {
        return Err(Error::ConditionViolated { condition: 1, detail: format!("branch {} not smooth", branches[i]) });
    }
    if !distortion.is_finite() {
        return Err(Error::ConditionViolated { condition: 3, detail: "distortion unbounded".into() });
    }
    let floor = expansion_floor(grid);
    let samples = grid * branches.len().max(1);
    let mut found = None;
    for ell in 1..=ell_max {
        let mut beta = f64::INFINITY;
        for i in 0..samples {
            let mut x = (i as f64 + 0.5) / samples as f64;
            let mut deriv = 1.0;
            let mut defined = true;
            for _ in 0..ell {
                let h = (x.min(1.0 - x) * 1e-6).max(1e-14);
                deriv *= ((scheme.f_inv(x + h) - scheme.f_inv(x - h)) / (2.0 * h)).abs();
                match t_map_f(scheme, x) {
                    Ok(y) if y > 0.0 && y < 1.0 => x = y,
                    _ => {
                        defined = false;
                        break;
                    }
                }
            }
            if defined {
                beta = beta.min(deriv);
            }
        }
        if beta >= floor {
            found = Some((ell, beta));
            break;
        }
    }
    let (ell, beta) = found.ok_or_else(|| Error::ConditionViolated {
        condition: 2,
        detail: format!("no ell <= {ell_max} with |(T^ell)'| >= {floor}"),
    })?;
    Ok(ConditionReport {
        branches,
        branch_cap: cap,
        c2_ok,
        ell,
        beta,
        distortion,
        distortion_bound: distortion.max(1.0),
        grid,
        preimage_sum_finite: scheme.preimage_sum_finite(),
    })
}

/// Piecewise-constant density on `bins` equal bins of `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantDensity {
    pub bins: usize,
    pub values: Vec<f64>,
    pub l1_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl InvariantDensity {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.bins as f64
    }

    pub fn at(&self, x: f64) -> f64 {
        let i = ((x * self.bins as f64) as usize).min(self.bins - 1);
        self.values[i]
    }

    /// `∫ |ρ - g|` with `g` integrated by Simpson's rule on each bin.
    pub fn l1_distance<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let n = self.bins as f64;
        (0..self.bins)
            .map(|i| {
                let (a, b) = (i as f64 / n, (i + 1) as f64 / n);
                let m = 16;
                let h = (b - a) / m as f64;
                (0..m)
                    .map(|j| {
                        let (x0, x1) = (a + j as f64 * h, a + (j + 1) as f64 * h);
                        let f = |x: f64| (self.values[i] - g(x)).abs();
                        (f(x0) + 4.0 * f((x0 + x1) / 2.0) + f(x1)) * h / 6.0
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Column `j` of the Ulam matrix: `(i, P_ij)` with
/// `P_ij = |bin_i ∩ T^{-1} bin_j| / |bin_i|`.
type Column = Vec<(usize, f64)>;

fn spread(col: &mut Vec<(usize, f64)>, bins: usize, lo: f64, hi: f64) {
    let n = bins as f64;
    let first = ((lo * n).floor() as usize).min(bins - 1);
    let last = ((hi * n).ceil() as usize).clamp(first + 1, bins);
    for i in first..last {
        let (a, b) = (i as f64 / n, (i + 1) as f64 / n);
        let overlap = hi.min(b) - lo.max(a);
        if overlap > 0.0 {
            col.push((i, overlap * n));
        }
    }
}

fn ulam_columns<S: ExpansionScheme + ?Sized>(scheme: &S, bins: usize) -> Result<Vec<Column>> {
    let first = scheme.first_digit();
    // explicit branches, then the remainder inside bin 0
    let (explicit_end, remainder) = match scheme.branch_bound() {
        Some(m) => (if scheme.direction() == Direction::Increasing { m } else { m + 1 }, false),
        None => (first + bins as u64 + 1, true),
    };
    let n = bins as f64;
    (0..bins)
        .into_par_iter()
        .map(|j| {
            let (s0, s1) = (j as f64 / n, (j + 1) as f64 / n);
            let mut col = Vec::new();
            for a in first..explicit_end {
                let (u, v) = (scheme.f(a as f64 + s0), scheme.f(a as f64 + s1));
                spread(&mut col, bins, u.min(v), u.max(v));
            }
            if remainder {
                let (mass, (_, hi)) = scheme
                    .tail_preimage(explicit_end, s0, s1)
                    .ok_or_else(|| Error::InvalidSpec("infinite scheme without a tail rule".into()))?;
                if hi > 1.0 / n {
                    return Err(Error::InvalidSpec("tail preimages not inside the first bin".into()));
                }
                col.push((0, mass * n));
            }
            // merge duplicate rows so the column is a plain sparse vector
            col.sort_by_key(|e| e.0);
            let mut merged: Column = Vec::with_capacity(col.len());
            for (i, p) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += p,
                    _ => merged.push((i, p)),
                }
            }
            Ok(merged)
        })
        .collect()
}

/// One application of the Ulam operator to a density vector.
pub fn ulam_step(columns: &[Column], v: &[f64]) -> Vec<f64> {
    columns.iter().map(|col| col.iter().map(|&(i, p)| v[i] * p).sum()).collect()
}

/// Power iteration of the Ulam discretisation of the transfer operator,
/// starting from the uniform density. The returned density carries a
/// `converged` flag; see [`ulam_invariant_density`] for the checked form.
pub fn ulam_iterate<S: ExpansionScheme + ?Sized>(
    scheme: &S,
    bins: usize,
    max_iters: usize,
    tol: f64,
) -> Result<InvariantDensity> {
    if bins < 16 {
        return Err(Error::DomainError("need at least 16 bins".into()));
    }
    let columns = ulam_columns(scheme, bins)?;
    let mut v = vec![1.0; bins];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let mut next = ulam_step(&columns, &v);
        let total: f64 = next.iter().sum::<f64>() / bins as f64;
        next.iter_mut().for_each(|x| *x /= total);
        residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum::<f64>() / bins as f64;
        v = next;
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    Ok(InvariantDensity { bins, values: v, l1_residual: residual, iterations, converged: residual < tol })
}

pub fn ulam_invariant_density<S: ExpansionScheme + ?Sized>(
    scheme: &S,
    bins: usize,
    max_iters: usize,
    tol: f64,
) -> Result<InvariantDensity> {
    let d = ulam_iterate(scheme, bins, max_iters, tol)?;
    if !d.converged {
        return Err(Error::NotConverged { residual: d.l1_residual });
    }
    Ok(d)
}

/// Fixed-point residual `||L ρ - ρ||_1` of a density under the Ulam
/// operator of `scheme`.
pub fn ulam_residual<S: ExpansionScheme + ?Sized>(scheme: &S, density: &InvariantDensity) -> Result<f64> {
    let columns = ulam_columns(scheme, density.bins)?;
    let next = ulam_step(&columns, &density.values);
    Ok(next.iter().zip(&density.values).map(|(a, b)| (a - b).abs()).sum::<f64>() / density.bins as f64)
}

/// A strictly increasing distribution function `F` on `[0, 1]`.
pub trait Cumulative: Send + Sync {
    fn cdf(&self, t: f64) -> f64;
    fn inv(&self, u: f64) -> f64;
}

/// Lebesgue measure: `F(t) = t`.
pub struct Lebesgue;

impl Cumulative for Lebesgue {
    fn cdf(&self, t: f64) -> f64 {
        t
    }
    fn inv(&self, u: f64) -> f64 {
        u
    }
}

/// The Gauss measure: `F(t) = log2(1 + t)`.
pub struct GaussCumulative;

impl Cumulative for GaussCumulative {
    fn cdf(&self, t: f64) -> f64 {
        t.ln_1p() / std::f64::consts::LN_2
    }
    fn inv(&self, u: f64) -> f64 {
        (u * std::f64::consts::LN_2).exp_m1()
    }
}

/// Piecewise-linear cumulative of a piecewise-constant density, inverted
/// exactly bin by bin.
pub struct UlamCumulative {
    values: Vec<f64>,
    /// `F` at bin left edges, `cum[bins] = 1`.
    cum: Vec<f64>,
}

impl UlamCumulative {
    pub fn new(density: &InvariantDensity) -> Result<Self> {
        if density.values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::DensityNotPositive);
        }
        let n = density.bins as f64;
        let total: f64 = density.values.iter().sum::<f64>() / n;
        let values: Vec<f64> = density.values.iter().map(|v| v / total).collect();
        let mut cum = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for v in &values {
            acc += v / n;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(Self { values, cum })
    }
}

impl Cumulative for UlamCumulative {
    fn cdf(&self, t: f64) -> f64 {
        let bins = self.values.len();
        let n = bins as f64;
        let i = ((t * n) as usize).min(bins - 1);
        self.cum[i] + self.values[i] * (t - i as f64 / n)
    }

    fn inv(&self, u: f64) -> f64 {
        let bins = self.values.len();
        let i = self.cum.partition_point(|&c| c <= u).saturating_sub(1).min(bins - 1);
        (i as f64 / bins as f64 + (u - self.cum[i]) / self.values[i]).clamp(0.0, 1.0)
    }
}

/// `S(x) = F(T(F^{-1}(x)))`.
pub fn conjugated_map_s<S: ExpansionScheme + ?Sized, F: Cumulative + ?Sized>(scheme: &S, cdf: &F, x: f64) -> Result<f64> {
    Ok(cdf.cdf(t_map_f(scheme, cdf.inv(x))?))
}

/// Affine least-squares fit of `S` at `probes` equally spaced interior
/// points of `F(branch a)`; returns the largest residual divided by the
/// length of `F(branch a)`. Zero means `S` is affine on the branch at this
/// resolution, which is what Markov digits would require.
pub fn markov_obstruction_defect<S: ExpansionScheme + ?Sized, F: Cumulative + ?Sized>(
    scheme: &S,
    cdf: &F,
    a: u64,
    probes: usize,
) -> Result<f64> {
    if probes < 3 {
        return Err(Error::DomainError("need at least 3 probes".into()));
    }
    let (lo, hi) = scheme.branch(a)?;
    let (u0, u1) = (cdf.cdf(lo), cdf.cdf(hi));
    let xs: Vec<f64> = (1..=probes).map(|i| u0 + (u1 - u0) * i as f64 / (probes + 1) as f64).collect();
    let ys = xs.iter().map(|&x| conjugated_map_s(scheme, cdf, x)).collect::<Result<Vec<_>>>()?;
    let m = probes as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let worst = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).abs()).fold(0.0, f64::max);
    Ok(worst / (u1 - u0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn digit_examples() {
        let b2 = BuiltinScheme::base(2).unwrap();
        assert_eq!(digits_f(&b2, &RealPoint::ratio(1, 3).unwrap(), 6).unwrap(), vec![0, 1, 0, 1, 0, 1]);
        let cf = BuiltinScheme::Cf;
        let x = RealPoint::ratio(2, 3).unwrap();
        assert_eq!(digits_f(&cf, &x, 2).unwrap(), vec![1, 2]);
        assert_eq!(digits_f(&cf, &x, 3), Err(Error::OrbitHitsZero { emitted: 2 }));
        let b10 = BuiltinScheme::base(10).unwrap();
        let x = RealPoint::ratio(1, 4).unwrap();
        assert_eq!(digits_f(&b10, &x, 2).unwrap(), vec![2, 5]);
        assert_eq!(digits_f(&b10, &x, 3), Err(Error::OrbitHitsZero { emitted: 2 }));
        assert!(BuiltinScheme::base(1).is_err());
    }

    #[test]
    fn approx_base_digits_stop_at_budget() {
        let b2 = BuiltinScheme::base(2).unwrap();
        let x = RealPoint::approx(q(1, 3), 20).unwrap();
        assert!(digits_f(&b2, &x, 18).is_ok());
        assert!(matches!(digits_f(&b2, &x, 25), Err(Error::PrecisionExhausted { .. })));
    }

    #[test]
    fn reconstruct_examples() {
        let b2 = BuiltinScheme::base(2).unwrap();
        assert_eq!(reconstruct_f(&b2, &[1, 0, 1]).unwrap(), (q(5, 8), q(6, 8)));
        assert_eq!(reconstruct_f(&BuiltinScheme::Cf, &[1, 1]).unwrap(), (q(1, 2), q(2, 3)));
        assert_eq!(reconstruct_f(&BuiltinScheme::base(3).unwrap(), &[2]).unwrap(), (q(2, 3), q(1, 1)));
        assert_eq!(
            reconstruct_f(&b2, &[0, 2]),
            Err(Error::InvalidDigit { position: 1, digit: 2 })
        );
        assert!(reconstruct_f(&BuiltinScheme::Cf, &[0]).is_err());
    }

    #[test]
    fn t_map_examples() {
        assert_eq!(t_map_f(&BuiltinScheme::base(2).unwrap(), 0.3).unwrap(), 0.6);
        assert_eq!(t_map_f(&BuiltinScheme::Cf, 2.0 / 3.0).unwrap(), 0.5);
        assert_eq!(t_map_f(&BuiltinScheme::base(10).unwrap(), 0.25).unwrap(), 0.5);
        assert_eq!(t_map_f(&BuiltinScheme::Cf, 0.5), Err(Error::UndefinedAtBranchEnd));
        assert_eq!(t_map_exact(&BuiltinScheme::Cf, &q(2, 3)).unwrap(), q(1, 2));
    }

    #[test]
    fn condition_examples() {
        let r = check_conditions(&BuiltinScheme::base(2).unwrap(), 64, 3).unwrap();
        assert_eq!(r.ell, 1);
        assert!((r.beta - 2.0).abs() < 1e-6);
        assert_eq!(r.distortion, 0.0);
        let r = check_conditions(&BuiltinScheme::Cf, 64, 3).unwrap();
        assert!(r.ell >= 2 && r.ell <= 3 && r.beta > 1.0, "{r:?}");
        assert!(r.distortion.is_finite() && r.distortion > 0.0);
        // 2 (a+1)^3 / a^4 is largest at a = 1
        assert!((r.distortion - 16.0).abs() < 1.0, "{}", r.distortion);
        assert_eq!(r.branch_cap, Some(DEFAULT_BRANCH_CAP));
    }

    #[test]
    fn ulam_base_two_is_uniform() {
        let d = ulam_invariant_density(&BuiltinScheme::base(2).unwrap(), 256, 100, 1e-12).unwrap();
        assert!(d.values.iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert!((d.integral() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ulam_gauss_density() {
        let d = ulam_invariant_density(&BuiltinScheme::Cf, 512, 500, 1e-12).unwrap();
        let g = |x: f64| 1.0 / ((1.0 + x) * std::f64::consts::LN_2);
        assert!(d.l1_distance(g) < 0.05);
        assert!((d.values[0] - 1.0 / std::f64::consts::LN_2).abs() < 0.05);
        assert!((d.integral() - 1.0).abs() < 1e-10);
        assert!(ulam_residual(&BuiltinScheme::Cf, &d).unwrap() < 1e-10);
    }

    #[test]
    fn conjugated_map_examples() {
        let b2 = BuiltinScheme::base(2).unwrap();
        assert!((conjugated_map_s(&b2, &Lebesgue, 0.3).unwrap() - 0.6).abs() < 1e-15);
        let g = GaussCumulative;
        for x in [0.13, 0.37, 0.8] {
            let s = conjugated_map_s(&BuiltinScheme::Cf, &g, g.cdf(x)).unwrap();
            assert!((s - g.cdf(t_map_f(&BuiltinScheme::Cf, x).unwrap())).abs() < 1e-12);
        }
        let bad = InvariantDensity { bins: 16, values: vec![0.0; 16], l1_residual: 0.0, iterations: 0, converged: true };
        assert!(matches!(UlamCumulative::new(&bad), Err(Error::DensityNotPositive)));
    }

    #[test]
    fn obstruction_examples() {
        let b2 = BuiltinScheme::base(2).unwrap();
        assert!(markov_obstruction_defect(&b2, &Lebesgue, 0, 5).unwrap() < 1e-6);
        let d = markov_obstruction_defect(&BuiltinScheme::Cf, &GaussCumulative, 1, 3).unwrap();
        assert!(d > 0.01, "{d}");
        // hand evaluation at u = F(1/2) + (1 - F(1/2)) i/4
        assert!((d - 0.019543139341752).abs() < 1e-9, "{d}");
        assert!(matches!(markov_obstruction_defect(&b2, &Lebesgue, 2, 3), Err(Error::BranchOutOfRange(2))));
        let dens = ulam_invariant_density(&BuiltinScheme::Cf, 512, 500, 1e-12).unwrap();
        let f = UlamCumulative::new(&dens).unwrap();
        let d = markov_obstruction_defect(&BuiltinScheme::Cf, &f, 1, 3).unwrap();
        assert!(d > 0.005, "{d}");
    }

    #[test]
    fn scheme_json() {
        let s: BuiltinScheme = serde_json::from_str(r#"{"kind":"base-m","m":3}"#).unwrap();
        assert_eq!(s, BuiltinScheme::BaseM { m: 3 });
        assert_eq!(serde_json::to_string(&BuiltinScheme::Cf).unwrap(), r#"{"kind":"cf"}"#);
    }
}
