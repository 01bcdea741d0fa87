//! Exact-or-float scalars.
//!
//! Sequence parameters and custom coefficients are read either as exact
//! rationals (`"3/4"`, `"2"`, `"0.125"`) or as binary floats. Rational values
//! keep every downstream computation exact when the family allows it.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Rational(BigRational),
    Float(f64),
}

impl Number {
    pub fn ratio(num: i64, den: i64) -> Self {
        Number::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn integer(n: i64) -> Self {
        Number::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(q) => rational_to_f64(q),
            Number::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Number::Rational(q) => Some(q),
            Number::Float(_) => None,
        }
    }

    /// The value as an integer, if it is an exact integer.
    pub fn as_integer(&self) -> Option<i64> {
        self.as_rational()
            .filter(|q| q.is_integer())
            .and_then(|q| q.to_integer().to_i64())
    }
}

/// Converts a big rational to the nearest double without overflowing on
/// large numerators and denominators.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(x) = q.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    let (n, d) = (q.numer(), q.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(1000);
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Parses `"p/q"`, integers and finite decimals into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).ok()?;
        let q = BigInt::from_str(q.trim()).ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&all).ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let power = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= power;
    } else {
        value /= power;
    }
    Some(if negative { -value } else { value })
}

/// Rational formatted as `p/q`, or `p` when integral.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl FromStr for Number {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(q) = parse_rational(s) {
            return Ok(Number::Rational(q));
        }
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Number::Float)
            .ok_or_else(|| Error::InvalidInput(format!("cannot parse number {s:?}")))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(q) => f.write_str(&format_rational(q)),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

impl From<BigRational> for Number {
    fn from(q: BigRational) -> Self {
        Number::Rational(q)
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Number::Rational(q) => serializer.serialize_str(&format_rational(q)),
            Number::Float(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct NumberVisitor;

        impl Visitor<'_> for NumberVisitor {
            type Value = Number;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"3/4\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Number, E> {
                v.parse().map_err(|e: Error| E::custom(e.to_string()))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Number, E> {
                Ok(Number::integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Number, E> {
                Ok(Number::Rational(BigRational::from_integer(BigInt::from(v))))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Number, E> {
                Ok(Number::Float(v))
            }
        }

        deserializer.deserialize_any(NumberVisitor)
    }
}

/// `true` when the rational is strictly negative.
pub fn is_negative(q: &BigRational) -> bool {
    q.is_negative()
}
