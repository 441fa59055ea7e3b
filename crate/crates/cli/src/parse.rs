use std::fs;

use cfdim::cf::{DigitWord, RealPoint};
use cfdim::deviations::SubsequenceSpec;
use cfdim::fexp::BuiltinScheme;
use cfdim::process::{DigitLaw, ProcessSpec};
use cfdim::{Error, Result};
use serde::de::DeserializeOwned;

pub fn word(s: &str) -> Result<DigitWord> {
    s.parse()
}

/// `"p/q"`, `"sqrt:N"` or a decimal.
pub fn point(s: &str, bits: u32) -> Result<RealPoint> {
    let s = s.trim();
    if let Some(n) = s.strip_prefix("sqrt:") {
        return RealPoint::sqrt_frac(int(n)?, bits);
    }
    if let Some((p, q)) = s.split_once('/') {
        return RealPoint::ratio(int(p)?, int(q)?);
    }
    let x: f64 = s.parse().map_err(|_| Error::DomainError(format!("cannot read point {s:?}")))?;
    RealPoint::from_f64(x)
}

fn int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::DomainError(format!("bad integer {s:?}")))
}

fn json<T: DeserializeOwned>(s: &str) -> Option<Result<T>> {
    let text = if let Some(path) = s.strip_prefix('@') {
        match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return Some(Err(Error::InvalidSpec(format!("{path}: {e}")))),
        }
    } else if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        return None;
    };
    Some(serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(e.to_string())))
}

pub fn law(s: &str) -> Result<DigitLaw> {
    if let Some(l) = json::<DigitLaw>(s) {
        let l = l?;
        l.validate()?;
        return Ok(l);
    }
    match s.split_once(':') {
        Some(("uniform", d)) => Ok(DigitLaw::uniform(int(d)?)),
        Some(("point", d)) => Ok(DigitLaw::point_mass(int(d)?)),
        _ => Err(Error::InvalidSpec(format!("unknown law {s:?}"))),
    }
}

pub fn process(s: &str) -> Result<ProcessSpec> {
    if let Some(p) = json::<ProcessSpec>(s) {
        let p = p?;
        p.validate()?;
        return Ok(p);
    }
    if s == "gauss" {
        return Ok(ProcessSpec::Gauss);
    }
    match s.split_once(':') {
        Some(("gauss-markov", k)) => ProcessSpec::gauss_markov(int(k)?),
        Some(("uniform" | "point", _)) => Ok(ProcessSpec::iid(law(s)?)),
        _ => Err(Error::InvalidSpec(format!("unknown process {s:?}"))),
    }
}

pub fn subsequence(s: &str) -> Result<SubsequenceSpec> {
    if let Some(q) = json::<SubsequenceSpec>(s) {
        let q = q?;
        q.validate()?;
        return Ok(q);
    }
    if s == "identity" {
        return Ok(SubsequenceSpec::identity());
    }
    match s.split_once(':') {
        Some(("arithmetic", c)) => SubsequenceSpec::arithmetic(int(c)?),
        Some(("explicit", vs)) => SubsequenceSpec::explicit(vs.split(',').map(int).collect::<Result<_>>()?),
        _ => Err(Error::InvalidSpec(format!("unknown subsequence {s:?}"))),
    }
}

pub fn scheme(s: &str) -> Result<BuiltinScheme> {
    if let Some(b) = json::<BuiltinScheme>(s) {
        let b = b?;
        b.validate()?;
        return Ok(b);
    }
    if s == "cf" {
        return Ok(BuiltinScheme::Cf);
    }
    match s.strip_prefix("base-") {
        Some(m) => BuiltinScheme::base(int(m)?),
        None => Err(Error::InvalidSpec(format!("unknown scheme {s:?}"))),
    }
}
