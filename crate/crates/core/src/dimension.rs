//! Entropy, Lyapunov exponent and dimension `h / γ` of digit processes.
//!
//! All logarithms are natural, so `h` and `γ` are in nats and the ratio is
//! base free.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::cf::{ln_cylinder_length_f64, Digit};
use crate::error::{Error, Result};
use crate::gauss::{sample_mu_g_digits, GaussConditional};
use crate::mc::{par_samples, MeanEstimate};
use crate::process::{DigitLaw, ProcessSpec};

/// Extra digits drawn past the path end so the backward evaluation of
/// `T^j x` has converged to double precision for every `j < n`.
const PAD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    SmbMc,
    BirkhoffMc,
    KinneyPitcher,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub entropy: f64,
    pub lyapunov: f64,
    pub dim: f64,
    pub stderr_h: f64,
    pub stderr_gamma: f64,
    pub method: Method,
    pub samples: usize,
}

impl DimensionEstimate {
    pub fn new(entropy: f64, stderr_h: f64, lyapunov: f64, stderr_gamma: f64, method: Method, samples: usize) -> Self {
        Self { entropy, lyapunov, dim: entropy / lyapunov, stderr_h, stderr_gamma, method, samples }
    }

    /// Delta-method standard error of `h / γ`.
    pub fn stderr_dim(&self) -> f64 {
        let g = self.lyapunov;
        ((self.stderr_h / g).powi(2) + (self.stderr_gamma * self.entropy / (g * g)).powi(2)).sqrt()
    }
}

/// `γ = π² / (6 ln 2)`, the Lyapunov exponent (and entropy) of the Gauss
/// measure.
pub fn lyapunov_gauss_exact() -> f64 {
    PI * PI / (6.0 * LN_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Midpoint of the bracket `[H_C, H_C + tail]`, averaged over states.
    pub h: f64,
    pub stderr: f64,
    /// Half-width of the truncation bracket.
    pub tail_bound: f64,
    pub samples: usize,
    pub cap: u64,
}

/// Conditional entropy of the next digit given `law`, truncated at `cap`,
/// with a bound on the neglected part.
///
/// For `c > C`, `p_c <= K / (c (c+1))` with `K = 1 / total` since the tail
/// density is at most 1. Comparing with the law `C / ((c-1) c)` on
/// `c > C` (Gibbs) gives
/// `-sum_{c>C} p_c ln p_c <= -t ln t + K (ln C + 2) / C`, `t = P(next > C)`.
pub fn conditional_entropy_bracket(law: &GaussConditional, cap: u64) -> (f64, f64) {
    let mut h = 0.0;
    for c in 1..=cap {
        let p = law.prob(c);
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    let t = law.prob_greater(cap);
    let k = 1.0 / law.total();
    let cf = cap as f64;
    let tail = if t > 0.0 { -t * t.ln() } else { 0.0 } + k * (cf.ln() + 2.0) / cf;
    (h, tail)
}

/// Entropy of the Gauss-derived k-step chain,
/// `h = -sum_a p_a sum_c p_{a,c} ln p_{a,c}`: states `a` are drawn exactly
/// from the Gauss measure, the inner sum is exact up to `cap`, and the
/// truncation bracket is carried as `tail_bound`.
pub fn entropy_gauss_markov(k: usize, outer_samples: usize, cap: u64, seed: u64) -> Result<EntropyEstimate> {
    if k == 0 {
        return Err(Error::DomainError("order must be >= 1".into()));
    }
    if cap < 16 {
        return Err(Error::DomainError("inner cap must be >= 16".into()));
    }
    if outer_samples < 2 {
        return Err(Error::DomainError("need at least 2 outer samples".into()));
    }
    let pairs = par_samples(outer_samples, seed, |_, rng| {
        let state = sample_mu_g_digits(k, rng);
        conditional_entropy_bracket(&GaussConditional::after(state.digits()), cap)
    });
    let mids: Vec<f64> = pairs.iter().map(|(h, t)| h + t / 2.0).collect();
    let halves: Vec<f64> = pairs.iter().map(|(_, t)| t / 2.0).collect();
    let est = MeanEstimate::from_samples(&mids);
    Ok(EntropyEstimate {
        h: est.mean,
        stderr: est.stderr,
        tail_bound: MeanEstimate::from_samples(&halves).mean,
        samples: outer_samples,
        cap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// `-(1/n) ln |J_n|` averaged over paths.
    pub gamma: f64,
    pub stderr: f64,
    /// Birkhoff average of `-2 ln T^j x`, `j < n`.
    pub birkhoff: f64,
    pub birkhoff_stderr: f64,
    pub n: usize,
    pub samples: usize,
    /// The two estimators agree within `3` joint standard errors plus the
    /// deterministic gap `3 ln 2 / n` between them.
    pub agree: bool,
}

/// `x_j = T^j x` for `j < n`, evaluated backwards from the end of `digits`.
pub(crate) fn orbit_logs(digits: &[Digit], n: usize) -> f64 {
    let mut y = 0.0;
    let mut acc = 0.0;
    for (j, &d) in digits.iter().enumerate().rev() {
        y = 1.0 / (d as f64 + y);
        if j < n {
            acc += y.ln();
        }
    }
    -2.0 * acc
}

pub fn lyapunov_mc(spec: &ProcessSpec, n: usize, samples: usize, seed: u64) -> Result<LyapunovEstimate> {
    spec.validate()?;
    if n < 100 {
        return Err(Error::DomainError("path length must be >= 100".into()));
    }
    if samples == 0 {
        return Err(Error::DomainError("need at least one sample".into()));
    }
    let pairs = par_samples(samples, seed, |_, rng| {
        let (digits, _) = spec.sample_with_ln_mass(n + PAD, rng);
        let by_length = -ln_cylinder_length_f64(&digits[..n]) / n as f64;
        let by_orbit = orbit_logs(&digits, n) / n as f64;
        (by_length, by_orbit)
    });
    let a = MeanEstimate::from_samples(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let b = MeanEstimate::from_samples(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let joint = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let agree = (a.mean - b.mean).abs() <= 3.0 * joint + 3.0 * LN_2 / n as f64;
    Ok(LyapunovEstimate {
        gamma: a.mean,
        stderr: a.stderr,
        birkhoff: b.mean,
        birkhoff_stderr: b.stderr,
        n,
        samples,
        agree,
    })
}

/// Shannon-McMillan-Breiman estimate `-(1/n) ln ν(J_n)`.
pub fn entropy_smb_mc(spec: &ProcessSpec, n: usize, samples: usize, seed: u64) -> Result<MeanEstimate> {
    spec.validate()?;
    if n == 0 || n < spec.min_len() || samples == 0 {
        return Err(Error::DomainError("need n >= max(1, order) and samples >= 1".into()));
    }
    let vals = par_samples(samples, seed, |_, rng| spec.sample_with_ln_mass(n, rng).1);
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::ZeroMassEncountered { sample: i });
    }
    let per: Vec<f64> = vals.iter().map(|v| -v / n as f64).collect();
    Ok(MeanEstimate::from_samples(&per))
}

/// Pointwise dimension estimate `ln ν(J_n) / ln |J_n|` averaged over paths.
pub fn local_dimension(spec: &ProcessSpec, n: usize, samples: usize, seed: u64) -> Result<MeanEstimate> {
    spec.validate()?;
    if n == 0 || n < spec.min_len() || samples == 0 {
        return Err(Error::DomainError("need n >= max(1, order) and samples >= 1".into()));
    }
    let vals = par_samples(samples, seed, |_, rng| {
        let (digits, ln_mass) = spec.sample_with_ln_mass(n, rng);
        (ln_mass, ln_cylinder_length_f64(&digits))
    });
    if let Some(i) = vals.iter().position(|v| !v.0.is_finite()) {
        return Err(Error::ZeroMassEncountered { sample: i });
    }
    let per: Vec<f64> = vals.iter().map(|(m, l)| m / l).collect();
    Ok(MeanEstimate::from_samples(&per))
}

/// `dim = H(A_1) / γ` for i.i.d. digits: the entropy is exact and `γ` is a
/// Birkhoff average over sampled paths.
pub fn kinney_pitcher_dim(law: &DigitLaw, n: usize, samples: usize, seed: u64) -> Result<DimensionEstimate> {
    let h = law.entropy()?;
    law.mean_log()?;
    let spec = ProcessSpec::iid(law.clone());
    let lyap = lyapunov_mc(&spec, n, samples, seed)?;
    Ok(DimensionEstimate::new(h, 0.0, lyap.birkhoff, lyap.birkhoff_stderr, Method::KinneyPitcher, samples))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBudgets {
    pub outer_samples: usize,
    pub inner_cap: u64,
    pub path_len: usize,
    pub lyapunov_samples: usize,
}

impl Default for GapBudgets {
    fn default() -> Self {
        Self { outer_samples: 4000, inner_cap: 4096, path_len: 1000, lyapunov_samples: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub k: usize,
    pub dim_estimate: f64,
    pub dim_stderr: f64,
    /// `max(0, 1 - 2^(3-k))`.
    pub bound: f64,
    pub entropy: f64,
    pub entropy_stderr: f64,
    /// `h_ν >= h_{μ_G}` within three standard errors and the truncation
    /// half-width.
    pub entropy_check: bool,
    pub lyapunov: f64,
    pub lyapunov_stderr: f64,
    pub lyapunov_gap: f64,
    pub lyapunov_gap_bound: f64,
    pub lyapunov_check: bool,
    pub dim_check: bool,
}

impl GapReport {
    pub fn bound_for(k: usize) -> f64 {
        (1.0 - 2f64.powi(3 - k as i32)).max(0.0)
    }

    pub fn passed(&self) -> bool {
        self.entropy_check && self.lyapunov_check && self.dim_check
    }
}

/// Estimates `dim ν_k = h / γ` for the Gauss-derived k-step chain and
/// checks `dim >= 1 - 2^(3-k)`, `h_ν >= h_{μ_G}` and
/// `|γ_ν - γ_{μ_G}| <= 2^(3-k)`, each up to three standard errors.
pub fn verify_gap_bound(k: usize, budgets: &GapBudgets, seed: u64) -> Result<GapReport> {
    let ent = entropy_gauss_markov(k, budgets.outer_samples, budgets.inner_cap, seed)?;
    let spec = ProcessSpec::gauss_markov(k)?;
    let lyap = lyapunov_mc(&spec, budgets.path_len, budgets.lyapunov_samples, seed.wrapping_add(1))?;
    let est = DimensionEstimate::new(ent.h, ent.stderr, lyap.gamma, lyap.stderr, Method::Series, budgets.outer_samples);
    let dim_stderr = est.stderr_dim() + ent.tail_bound / lyap.gamma;
    let exact = lyapunov_gauss_exact();
    let bound = GapReport::bound_for(k);
    let gap_bound = 2f64.powi(3 - k as i32);
    let gap = (lyap.gamma - exact).abs();
    Ok(GapReport {
        k,
        dim_estimate: est.dim,
        dim_stderr,
        bound,
        entropy: ent.h,
        entropy_stderr: ent.stderr,
        entropy_check: ent.h >= exact - 3.0 * ent.stderr - ent.tail_bound,
        lyapunov: lyap.gamma,
        lyapunov_stderr: lyap.stderr,
        lyapunov_gap: gap,
        lyapunov_gap_bound: gap_bound,
        lyapunov_check: gap <= gap_bound + 3.0 * lyap.stderr,
        dim_check: est.dim >= bound - 3.0 * dim_stderr,
    })
}
