//! Helpers around [`BigRational`]: string encoding, logarithms and float conversion
//! that stay accurate for coefficients far outside the `f64` range.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Encodes as `"p/q"` with `q >= 1` and `gcd(p, q) = 1`.
pub fn to_string(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

/// Natural logarithm of a positive big integer.
pub fn ln_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 64 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Natural logarithm of a non-negative rational; `-inf` for zero.
pub fn ln(q: &Rational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(&q.numer().abs()) - ln_bigint(q.denom())
}

/// Float value; saturates to infinity instead of failing for huge values.
pub fn to_f64(q: &Rational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let s = if q.is_negative() { -1.0 } else { 1.0 };
    s * ln(&q.abs()).exp()
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn pow(q: &Rational, e: u32) -> Rational {
    num_traits::pow(q.clone(), e as usize)
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: &BigInt, k: u32) -> BigInt {
    if n.is_negative() {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - BigInt::from(i));
        acc = acc.div_floor(&BigInt::from(i + 1));
    }
    acc
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_roundtrip() {
        let q = ratio(6, -4);
        assert_eq!(to_string(&q), "-3/2");
        assert_eq!(parse("-3/2").unwrap(), q);
        assert_eq!(parse("7").unwrap(), int(7));
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn logs_of_huge_values() {
        let big = Rational::from_integer(BigInt::from(3).pow(900u32));
        assert!((ln(&big) - 900.0 * 3f64.ln()).abs() < 1e-9);
        let tiny = big.recip();
        assert!(to_f64(&tiny) == 0.0 || to_f64(&tiny) < 1e-300);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(&BigInt::from(10), 3), BigInt::from(120));
        assert_eq!(binomial(&BigInt::from(2), 3), BigInt::from(0));
        assert_eq!(binomial(&BigInt::from(5), 0), BigInt::from(1));
    }
}

/// Serde adapter storing a rational as its `"p/q"` string.
pub mod serde_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&super::to_string(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for maps with rational values.
pub mod serde_map {
    use std::collections::BTreeMap;

    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: BTreeMap<&String, String> = m.iter().map(|(k, v)| (k, super::to_string(v))).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<String, Rational>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| super::parse(&v).map(|q| (k, q)).map_err(serde::de::Error::custom))
            .collect()
    }
}
