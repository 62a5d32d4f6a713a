//! Sampling distributions, written and parsed in the notation
//! `U[a,b)`, `U[[a,b),[c,d)]`, `TN(mean,sd)[a,b)` and `B[a,b)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};

use crate::error::{Error, Result};

/// Truncated normals accepting fewer draws than this are rejected as misconfigured.
pub const MIN_TRUNC_NORMAL_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RangeSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Segment picked with probability proportional to its width.
    UnionUniform(Vec<(f64, f64)>),
    /// Normal(mean, sd) restricted to `[lo, hi)` by rejection.
    TruncNormal {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
    },
    /// Log-uniform on `[lo, hi)`, giving Benford-distributed leading digits.
    Benford {
        lo: f64,
        hi: f64,
    },
}

impl RangeSpec {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        RangeSpec::Uniform { lo, hi }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |lo: f64, hi: f64| {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("range [{lo},{hi}) is empty or non-finite")));
            }
            Ok(())
        };
        match self {
            RangeSpec::Uniform { lo, hi } => check(*lo, *hi),
            RangeSpec::UnionUniform(segs) => {
                if segs.is_empty() {
                    return Err(Error::Config("union range without segments".into()));
                }
                segs.iter().try_for_each(|&(lo, hi)| check(lo, hi))
            }
            RangeSpec::TruncNormal { mean, sd, lo, hi } => {
                check(*lo, *hi)?;
                if !(sd.is_finite() && *sd > 0.0 && mean.is_finite()) {
                    return Err(Error::Config(format!("truncated normal needs sd > 0, got {sd}")));
                }
                let acc = self.trunc_normal_acceptance();
                if acc < MIN_TRUNC_NORMAL_ACCEPTANCE {
                    return Err(Error::Config(format!(
                        "truncated normal {self} accepts only {acc:e} of draws"
                    )));
                }
                Ok(())
            }
            RangeSpec::Benford { lo, hi } => {
                check(*lo, *hi)?;
                if *lo <= 0.0 {
                    return Err(Error::Config(format!("Benford bounds must be positive, got {lo}")));
                }
                Ok(())
            }
        }
    }

    fn trunc_normal_acceptance(&self) -> f64 {
        match *self {
            RangeSpec::TruncNormal { mean, sd, lo, hi } => {
                let n = NormalCdf::new(mean, sd).expect("sd checked positive");
                n.cdf(hi) - n.cdf(lo)
            }
            _ => 1.0,
        }
    }

    /// Smallest and largest bound over all segments.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            RangeSpec::Uniform { lo, hi } | RangeSpec::TruncNormal { lo, hi, .. } | RangeSpec::Benford { lo, hi } => {
                (*lo, *hi)
            }
            RangeSpec::UnionUniform(segs) => segs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(lo, hi)| {
                    (a.min(lo), b.max(hi))
                }),
        }
    }

    /// Whether `v` lies inside the (half-open) support.
    pub fn contains(&self, v: f64) -> bool {
        match self {
            RangeSpec::UnionUniform(segs) => segs.iter().any(|&(lo, hi)| lo <= v && v < hi),
            _ => {
                let (lo, hi) = self.bounds();
                lo <= v && v < hi
            }
        }
    }

    /// Draws one value. The range must be valid.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RangeSpec::Uniform { lo, hi } => uniform(rng, *lo, *hi),
            RangeSpec::UnionUniform(segs) => {
                let total: f64 = segs.iter().map(|(lo, hi)| hi - lo).sum();
                let mut pick = rng.random::<f64>() * total;
                for &(lo, hi) in segs {
                    if pick < hi - lo {
                        return uniform(rng, lo, hi);
                    }
                    pick -= hi - lo;
                }
                let &(lo, hi) = segs.last().expect("validated non-empty");
                uniform(rng, lo, hi)
            }
            RangeSpec::TruncNormal { mean, sd, lo, hi } => {
                let normal = Normal::new(*mean, *sd).expect("validated sd");
                loop {
                    let v = normal.sample(rng);
                    if *lo <= v && v < *hi {
                        return v;
                    }
                }
            }
            RangeSpec::Benford { lo, hi } => {
                let (a, b) = (lo.ln(), hi.ln());
                loop {
                    let v = uniform(rng, a, b).exp();
                    if *lo <= v && v < *hi {
                        return v;
                    }
                }
            }
        }
    }

    /// Draws `n` values after validating the range.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        Ok((0..n).map(|_| self.sample_one(rng)).collect())
    }
}

/// Half-open uniform draw on `[lo, hi)`.
fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let v = lo + (hi - lo) * rng.random::<f64>();
        if v < hi {
            return v;
        }
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeSpec::Uniform { lo, hi } => write!(f, "U[{lo},{hi})"),
            RangeSpec::UnionUniform(segs) => {
                f.write_str("U[")?;
                for (i, (lo, hi)) in segs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "[{lo},{hi})")?;
                }
                f.write_str("]")
            }
            RangeSpec::TruncNormal { mean, sd, lo, hi } => write!(f, "TN({mean},{sd})[{lo},{hi})"),
            RangeSpec::Benford { lo, hi } => write!(f, "B[{lo},{hi})"),
        }
    }
}

fn parse_num(s: &str, full: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number `{s}` in range `{full}`")))
}

/// Parses `[a,b)` (the closing bracket may be `)` or `]`).
fn parse_interval(s: &str, full: &str) -> Result<(f64, f64)> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(')').or_else(|| r.strip_suffix(']')))
        .ok_or_else(|| Error::Parse(format!("expected `[a,b)` in range `{full}`, found `{s}`")))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("expected two bounds in `{s}` of `{full}`")))?;
    Ok((parse_num(a, full)?, parse_num(b, full)?))
}

impl FromStr for RangeSpec {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let spec = if let Some(rest) = s.strip_prefix("TN(") {
            let (params, interval) = rest
                .split_once(')')
                .ok_or_else(|| Error::Parse(format!("unclosed parameters in `{raw}`")))?;
            let (mean, sd) = params
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected TN(mean,sd) in `{raw}`")))?;
            let (lo, hi) = parse_interval(interval, raw)?;
            RangeSpec::TruncNormal {
                mean: parse_num(mean, raw)?,
                sd: parse_num(sd, raw)?,
                lo,
                hi,
            }
        } else if let Some(rest) = s.strip_prefix('B') {
            let (lo, hi) = parse_interval(rest, raw)?;
            RangeSpec::Benford { lo, hi }
        } else if let Some(rest) = s.strip_prefix('U') {
            if let Some(list) = rest.strip_prefix("[[").and_then(|r| r.strip_suffix(']')) {
                // U[[a,b),[c,d)]
                let list = format!("[{list}");
                let mut segs = Vec::new();
                for part in split_segments(&list) {
                    segs.push(parse_interval(part, raw)?);
                }
                RangeSpec::UnionUniform(segs)
            } else if rest.contains('∪') {
                // U[a,b)∪[c,d)
                let segs = rest
                    .split('∪')
                    .map(|p| parse_interval(p, raw))
                    .collect::<Result<Vec<_>>>()?;
                RangeSpec::UnionUniform(segs)
            } else {
                let (lo, hi) = parse_interval(rest, raw)?;
                RangeSpec::Uniform { lo, hi }
            }
        } else {
            return Err(Error::Parse(format!("unknown range notation `{raw}`")));
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Splits `[a,b),[c,d)` at the commas between segments.
fn split_segments(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl TryFrom<String> for RangeSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RangeSpec> for String {
    fn from(r: RangeSpec) -> String {
        r.to_string()
    }
}
