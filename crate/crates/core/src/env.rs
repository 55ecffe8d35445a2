//! Cookie environments: the vector of per-visit drift strengths, the total
//! drift, and the recurrence/transience/ballisticity classification.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// A finite deterministic cookie environment.
///
/// `probs[j-1]` is the probability of stepping right on the `j`-th visit to
/// a site; after `len()` visits the walk steps symmetrically. Entries must
/// lie strictly inside `(0, 1)`. The empty environment is the simple
/// symmetric random walk.
///
/// Each entry keeps an exact rational representation alongside its `f64`
/// value. Environments parsed from decimal strings carry the exact decimal
/// fraction, so drift comparisons against the classification thresholds 1
/// and 2 are decided without floating-point ambiguity.
#[derive(Debug, Clone, PartialEq)]
pub struct CookieEnvironment {
    probs: Vec<f64>,
    exact: Vec<BigRational>,
}

/// Direction of the almost-sure long-run behavior of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transience {
    /// Total drift exceeds 1: the walk drifts to plus infinity.
    TransientRight,
    /// Total drift is below -1: the walk drifts to minus infinity.
    TransientLeft,
    /// Total drift in [-1, 1]: the walk oscillates over all of the integers.
    RecurrentOscillating,
}

/// Sign of the deterministic limiting speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedSign {
    Positive,
    Zero,
    Negative,
}

/// Joint recurrence/ballisticity classification of an environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub transience: Transience,
    pub speed_sign: SpeedSign,
}

impl CookieEnvironment {
    /// Builds an environment from floating-point strengths. The exact
    /// representation is the exact binary value of each `f64`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut exact = Vec::with_capacity(probs.len());
        for (index, &p) in probs.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidCookie { index, value: p });
            }
            let r = BigRational::from_float(p).expect("finite by range check");
            exact.push(r);
        }
        Ok(Self { probs, exact })
    }

    /// Builds an environment from exact rational strengths.
    pub fn from_exact(exact: Vec<BigRational>) -> Result<Self> {
        let mut probs = Vec::with_capacity(exact.len());
        for (index, r) in exact.iter().enumerate() {
            if !(r.is_positive() && r < &BigRational::one()) {
                return Err(Error::InvalidCookie {
                    index,
                    value: rational_to_f64(r),
                });
            }
            probs.push(rational_to_f64(r));
        }
        Ok(Self { probs, exact })
    }

    /// Parses a comma-separated list of decimal strengths, e.g. `"0.9,0.8"`.
    ///
    /// Entries are kept as exact decimal fractions, so `"0.9,0.9,0.7"`
    /// has total drift exactly 2. The empty string is the empty environment.
    pub fn parse(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Self::new(Vec::new());
        }
        let mut exact = Vec::new();
        for entry in trimmed.split(',') {
            exact.push(parse_decimal(entry.trim())?);
        }
        Self::from_exact(exact)
    }

    /// Number of cookies per site.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Strengths as floating-point values.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Exact rational strengths.
    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    /// Probability of stepping right on the `j`-th visit (1-based); fair
    /// beyond the cookie window.
    pub fn step_probability(&self, visit: u32) -> f64 {
        let j = visit as usize;
        if j >= 1 && j <= self.probs.len() {
            self.probs[j - 1]
        } else {
            0.5
        }
    }

    /// Total drift stored in the cookies, evaluated in machine arithmetic.
    pub fn total_drift(&self) -> f64 {
        self.probs.iter().map(|p| 2.0 * p - 1.0).sum()
    }

    /// Total drift as an exact rational.
    pub fn total_drift_exact(&self) -> BigRational {
        let two = BigRational::from_integer(BigInt::from(2));
        let one = BigRational::one();
        self.exact
            .iter()
            .map(|p| &two * p - &one)
            .fold(BigRational::zero(), |acc, t| acc + t)
    }

    /// Recurrence/transience and speed-sign classification.
    ///
    /// Thresholds are compared in exact arithmetic: the walk is transient
    /// right iff the drift exceeds 1, transient left iff it is below -1,
    /// and has zero speed iff the drift lies in [-2, 2].
    pub fn classify(&self) -> Regime {
        let delta = self.total_drift_exact();
        let one = BigRational::one();
        let two = BigRational::from_integer(BigInt::from(2));
        let transience = if delta > one {
            Transience::TransientRight
        } else if delta < -BigRational::one() {
            Transience::TransientLeft
        } else {
            Transience::RecurrentOscillating
        };
        let speed_sign = if delta > two {
            SpeedSign::Positive
        } else if delta < -BigRational::from_integer(BigInt::from(2)) {
            SpeedSign::Negative
        } else {
            SpeedSign::Zero
        };
        Regime {
            transience,
            speed_sign,
        }
    }

    /// The reflected environment with strengths `1 - p_j`, which exchanges
    /// the roles of left and right.
    pub fn mirror(&self) -> Self {
        let one = BigRational::one();
        let exact: Vec<BigRational> = self.exact.iter().map(|p| &one - p).collect();
        let probs = exact.iter().map(rational_to_f64).collect();
        Self { probs, exact }
    }

    /// Pads the environment to length `m` with fair entries, which leave
    /// the walk law unchanged.
    pub fn padded_to(&self, m: usize) -> Self {
        if self.len() >= m {
            return self.clone();
        }
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut exact = self.exact.clone();
        exact.resize(m, half);
        let probs = exact.iter().map(rational_to_f64).collect();
        Self { probs, exact }
    }
}

impl fmt::Display for CookieEnvironment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for CookieEnvironment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for CookieEnvironment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            probs: &'a [f64],
        }
        Wire { probs: &self.probs }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CookieEnvironment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            probs: Vec<f64>,
        }
        let wire = Wire::deserialize(deserializer)?;
        CookieEnvironment::new(wire.probs).map_err(serde::de::Error::custom)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let numer = bigint_to_f64(r.numer());
    let denom = bigint_to_f64(r.denom());
    numer / denom
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    // BigInt -> f64 via string round-trip is exact enough for display-scale
    // denominators; the arithmetic paths all stay rational.
    x.to_string().parse::<f64>().unwrap_or(f64::NAN)
}

fn parse_decimal(entry: &str) -> Result<BigRational> {
    let err = |reason: &str| Error::ParseEnvironment {
        entry: entry.to_string(),
        reason: reason.to_string(),
    };
    if entry.is_empty() {
        return Err(err("empty entry"));
    }
    let (sign, body) = match entry.strip_prefix('-') {
        Some(rest) => (-1i32, rest),
        None => (1, entry.strip_prefix('+').unwrap_or(entry)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(err("expected a plain decimal like 0.9"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| err("integer overflow"))?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let mut r = BigRational::new(numer, denom);
    if sign < 0 {
        r = -r;
    }
    Ok(r)
}
