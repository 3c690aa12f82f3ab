//! Exact rationals and their `"p/q"` string form.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p`, `-p`, `p/q`. Decimal points are rejected so values stay exact.
pub fn parse(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| err())?;
    let d = BigInt::from_str(den).map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

/// `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format(q: &Rational) -> String {
    q.to_string()
}

pub fn to_u64(q: &Rational) -> Option<u64> {
    if !q.is_integer() || q.is_negative() {
        return None;
    }
    u64::try_from(q.numer()).ok()
}

pub fn min_positive_gap(sorted: &[Rational]) -> Option<Rational> {
    sorted.windows(2).map(|w| &w[1] - &w[0]).min()
}

pub fn is_zero(q: &Rational) -> bool {
    q.is_zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Serde adapter storing a rational as its `"p/q"` string.
pub mod serde_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_str_vec {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(qs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        qs.iter().map(super::format).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| super::parse(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Common-denominator integer images of a list of rationals, used by the
/// hot loops that only need equality of sums.
pub(crate) struct ScaledI128 {
    pub values: Vec<i128>,
}

impl ScaledI128 {
    /// Scales every value by the lcm of the denominators. Returns `None`
    /// when the numerators (times `headroom`) would not fit in an `i128`.
    pub fn new(values: &[Rational], headroom: u32) -> Option<Self> {
        use num_integer::Integer;
        let mut den = BigInt::one();
        for v in values {
            den = den.lcm(v.denom());
        }
        let bound = BigInt::from(i128::MAX) / BigInt::from(headroom.max(1));
        let mut out = Vec::with_capacity(values.len());
        for v in values {
            let scaled = v.numer() * (&den / v.denom());
            if scaled.abs() > bound {
                return None;
            }
            out.push(i128::try_from(&scaled).ok()?);
        }
        Some(Self { values: out })
    }
}
