//! Exact rational helpers and extended rationals (finite or +∞).

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for probabilities, rewards and values.
pub type Q = BigRational;

/// `n / d` as an exact rational.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Integer `n` as an exact rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Nearest `f64` to `x`.
pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() { f64::MIN } else { f64::MAX })
}

/// The exact rational value of a finite `f64`.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).unwrap_or_else(Q::zero)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as an exact rational")]
pub struct ParseRationalError(pub String);

/// Parses `"7/10"`, `"0.7"`, `"-3"` or `"1.25e-2"` without rounding.
pub fn parse_rational(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(String::from(s));
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let mut all = String::from(int_part);
    all.push_str(frac_part);
    let n = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| err())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut v = Q::from_integer(n);
    if scale >= 0 {
        v *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        v /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -v } else { v })
}

/// Renders `x` as a decimal with at most `digits` fractional digits (rounded toward zero).
pub fn to_decimal(x: &Q, digits: usize) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    if x.is_negative() {
        out.push('-');
    }
    let a = x.abs();
    let int = a.to_integer();
    let _ = write!(out, "{}", int);
    let mut frac = a - Q::from_integer(int);
    if !frac.is_zero() && digits > 0 {
        out.push('.');
        let ten = Q::from_integer(BigInt::from(10));
        for _ in 0..digits {
            frac *= &ten;
            let d = frac.to_integer();
            let _ = write!(out, "{}", d);
            frac -= Q::from_integer(d);
            if frac.is_zero() {
                break;
            }
        }
    }
    out
}

/// A non-negative extended rational: finite value or +∞.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtRational {
    Finite(Q),
    Infinite,
}

impl ExtRational {
    pub fn zero() -> Self {
        ExtRational::Finite(Q::zero())
    }

    pub fn one() -> Self {
        ExtRational::Finite(Q::one())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRational::Finite(_))
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            ExtRational::Finite(v) => Some(v),
            ExtRational::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRational::Finite(v) => to_f64(v),
            ExtRational::Infinite => f64::INFINITY,
        }
    }
}

impl From<Q> for ExtRational {
    fn from(v: Q) -> Self {
        ExtRational::Finite(v)
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => a.cmp(b),
            (ExtRational::Finite(_), ExtRational::Infinite) => Ordering::Less,
            (ExtRational::Infinite, ExtRational::Finite(_)) => Ordering::Greater,
            (ExtRational::Infinite, ExtRational::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::Finite(v) => write!(f, "{}", v),
            ExtRational::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtRational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "Infinity" | "∞" => Ok(ExtRational::Infinite),
            t => parse_rational(t).map(ExtRational::Finite),
        }
    }
}
