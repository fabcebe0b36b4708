//! Exact rationals and their `[num, den]` wire form.
//!
//! Integers that fit in an `i64` are written as JSON numbers; larger ones
//! (the faithful-mode constants reach `2^-145` and beyond) are written as
//! decimal strings. Both forms are accepted on input.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(q: &Rational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Very large numerators and denominators: scale through the bit lengths.
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = nb - db;
    let scaled = if shift >= 0 {
        Rational::new(q.numer().clone(), q.denom().clone() << (shift as usize))
    } else {
        Rational::new(q.numer().clone() << ((-shift) as usize), q.denom().clone())
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift.clamp(-2000, 2000) as i32)
}

/// Largest integer `<= q`.
pub fn floor(q: &Rational) -> BigInt {
    q.floor().to_integer()
}

pub fn floor_i128(q: &Rational) -> Option<i128> {
    floor(q).to_i128()
}

/// Integer power with a possibly negative exponent.
pub fn powi(q: &Rational, e: i64) -> Rational {
    if e >= 0 {
        num_traits::pow(q.clone(), e as usize)
    } else {
        num_traits::pow(q.recip(), (-e) as usize)
    }
}

/// Binomial coefficient `C(n, 2)`-style helper used by the pattern thresholds.
pub fn binom2(n: i64) -> i64 {
    n * (n - 1) / 2
}

pub fn is_positive(q: &Rational) -> bool {
    q.is_positive()
}

pub fn half() -> Rational {
    rat(1, 2)
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn zero() -> Rational {
    Rational::zero()
}

fn int_to_json(n: &BigInt) -> serde_json::Value {
    match n.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::String(n.to_string()),
    }
}

fn int_from_json(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

pub fn to_json(q: &Rational) -> serde_json::Value {
    serde_json::Value::Array(vec![int_to_json(q.numer()), int_to_json(q.denom())])
}

pub fn from_json(v: &serde_json::Value) -> Option<Rational> {
    let arr = v.as_array()?;
    if arr.len() != 2 {
        return None;
    }
    let n = int_from_json(&arr[0])?;
    let d = int_from_json(&arr[1])?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// `#[serde(with = "crate::rational::pair")]`
pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        to_json(q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        from_json(&v).ok_or_else(|| D::Error::custom("expected [num, den] with den != 0"))
    }
}

pub mod pair_vec {
    use super::*;

    pub fn serialize<S: Serializer>(qs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        serde_json::Value::Array(qs.iter().map(to_json).collect()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<serde_json::Value>::deserialize(d)?;
        v.iter()
            .map(|x| from_json(x).ok_or_else(|| D::Error::custom("expected [num, den]")))
            .collect()
    }
}

pub mod pair_opt {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => to_json(q).serialize(s),
            None => serde_json::Value::Null.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.is_null() {
            return Ok(None);
        }
        from_json(&v)
            .map(Some)
            .ok_or_else(|| D::Error::custom("expected [num, den] or null"))
    }
}

/// Reals in reports carry 12 significant digits.
pub mod real12 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn round(x: f64) -> f64 {
        if !x.is_finite() || x == 0.0 {
            return x;
        }
        format!("{:.11e}", x).parse().unwrap_or(x)
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(round(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d)
    }
}
