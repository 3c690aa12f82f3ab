//! Sequences with countably many accumulation points built on an
//! almost-disjoint family of subsets of ℕ.
//!
//! Each label is an eventually periodic binary stream `s`. The integers are
//! laid out in consecutive blocks: block `k` holds `4^k` integers starting at
//! `(4^k + 2)/3`, read as `2^k` copies of the `2^k` binary words of length
//! `k`. `A_s` takes every copy of the word `s|k` in every block, so two labels
//! share exactly the blocks of their common prefixes. Inside `A_s` the
//! dyadic cell `A_s^m` is the set of members whose 1-based enumeration index
//! has 2-adic valuation `m`; `x_s` equals `r^m` on `A_s^m` and `0` off `A_s`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::index_sets::lcm_checked;
use crate::rational::{self, Rational};

/// Deepest block addressable with `u64` members.
pub const MAX_LEVEL: u32 = 31;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OmegaError {
    #[error("invalid binary pattern `{0}`")]
    BadPattern(String),
    #[error("patterns {0} and {1} describe the same stream")]
    NotDistinct(usize, usize),
    #[error("family needs at least one pattern")]
    EmptyFamily,
    #[error("ladder ratio must lie strictly between 0 and 1")]
    RatioOutOfRange,
    #[error("vectors use different ladder ratios")]
    RatioMismatch,
    #[error("label index {0} out of range")]
    NoSuchLabel(usize),
    #[error("combination coefficients must be nonzero")]
    ZeroCoefficient,
    #[error("labels share a prefix of length {0}, beyond the addressable range")]
    PrefixTooLong(usize),
}

/// The stream `prefix · period^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryPattern {
    prefix: Vec<bool>,
    period: Vec<bool>,
}

impl BinaryPattern {
    pub fn new(prefix: Vec<bool>, period: Vec<bool>) -> Result<Self, OmegaError> {
        if period.is_empty() {
            return Err(OmegaError::BadPattern("empty period".into()));
        }
        Ok(Self { prefix, period })
    }

    pub fn bit(&self, i: usize) -> bool {
        match self.prefix.get(i) {
            Some(&b) => b,
            None => self.period[(i - self.prefix.len()) % self.period.len()],
        }
    }

    /// Length of the longest common prefix, or `None` for equal streams.
    pub fn common_prefix_len(&self, other: &Self) -> Option<usize> {
        let periods = lcm_checked(self.period.len() as u64, other.period.len() as u64).expect("short periods") as usize;
        let horizon = self.prefix.len().max(other.prefix.len()) + periods;
        (0..horizon).find(|&i| self.bit(i) != other.bit(i))
    }

    /// `s|k` read as a binary number, most significant bit first.
    pub fn word_value(&self, k: u32) -> u64 {
        (0..k as usize).fold(0u64, |acc, i| (acc << 1) | self.bit(i) as u64)
    }
}

impl fmt::Display for BinaryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        write!(f, "bin({};{})", bits(&self.prefix), bits(&self.period))
    }
}

impl FromStr for BinaryPattern {
    type Err = OmegaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || OmegaError::BadPattern(s.to_string());
        let inner = s.trim().strip_prefix("bin(").and_then(|r| r.strip_suffix(')')).ok_or_else(err)?;
        let (pre, per) = inner.split_once(';').ok_or_else(err)?;
        let bits = |t: &str| {
            t.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(err()),
                })
                .collect::<Result<Vec<bool>, _>>()
        };
        BinaryPattern::new(bits(pre)?, bits(per)?).map_err(|_| err())
    }
}

impl Serialize for BinaryPattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// First integer of block `k`.
pub fn block_base(k: u32) -> u64 {
    (1u64 << (2 * k)).div_ceil(3)
}

/// Block level and offset of `n ≥ 1`.
fn locate(n: u64) -> (u32, u64) {
    let mut k = 0;
    while k < MAX_LEVEL && block_base(k + 1) <= n {
        k += 1;
    }
    (k, n - block_base(k))
}

/// `A_s` for one label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberSet {
    pub label: BinaryPattern,
}

impl MemberSet {
    /// 1-based enumeration index of `n` in `A_s`, if `n ∈ A_s`.
    pub fn index_of(&self, n: u64) -> Option<u64> {
        if n == 0 {
            return None;
        }
        let (k, offset) = locate(n);
        let width = 1u64 << k;
        (offset % width == self.label.word_value(k)).then(|| width + offset / width)
    }

    pub fn contains(&self, n: u64) -> bool {
        self.index_of(n).is_some()
    }

    /// The `j`-th member (1-based).
    pub fn nth(&self, j: u64) -> u64 {
        assert!(j >= 1);
        let k = 63 - j.leading_zeros();
        let copy = j - (1u64 << k);
        block_base(k) + copy * (1u64 << k) + self.label.word_value(k)
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (1u64..).map(|j| self.nth(j))
    }

    /// Members of the dyadic cell `A_s^m` in increasing order.
    pub fn cell_members(&self, m: u32) -> impl Iterator<Item = u64> + '_ {
        (0u64..).map(move |i| self.nth((2 * i + 1) << m))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlmostDisjointFamily {
    pub labels: Vec<BinaryPattern>,
}

impl AlmostDisjointFamily {
    pub fn new(labels: Vec<BinaryPattern>) -> Result<Self, OmegaError> {
        if labels.is_empty() {
            return Err(OmegaError::EmptyFamily);
        }
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                match labels[i].common_prefix_len(&labels[j]) {
                    None => return Err(OmegaError::NotDistinct(i, j)),
                    Some(l) if l >= MAX_LEVEL as usize => return Err(OmegaError::PrefixTooLong(l)),
                    Some(_) => {}
                }
            }
        }
        Ok(Self { labels })
    }

    pub fn member_set(&self, i: usize) -> Result<MemberSet, OmegaError> {
        let label = self.labels.get(i).ok_or(OmegaError::NoSuchLabel(i))?.clone();
        Ok(MemberSet { label })
    }

    /// `A_s ∩ A_t`: every copy in the blocks of shared prefixes.
    pub fn intersection(&self, i: usize, j: usize) -> Result<Vec<u64>, OmegaError> {
        let a = self.member_set(i)?;
        let b = self.member_set(j)?;
        let shared = match a.label.common_prefix_len(&b.label) {
            None => return Err(OmegaError::NotDistinct(i, j)),
            Some(l) => l as u32,
        };
        let count = (1u64 << (shared + 1)) - 1;
        Ok((1..=count).map(|idx| a.nth(idx)).collect())
    }

    pub fn vector(&self, i: usize, ratio: Rational) -> Result<OmegaVector, OmegaError> {
        OmegaVector::new(self.member_set(i)?, ratio)
    }
}

/// `x_s`: `r^m` on `A_s^m`, `0` off `A_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaVector {
    pub base: MemberSet,
    #[serde(serialize_with = "rational::serde_str::serialize")]
    pub ratio: Rational,
}

impl OmegaVector {
    pub fn new(base: MemberSet, ratio: Rational) -> Result<Self, OmegaError> {
        if !ratio.is_positive() || ratio >= Rational::one() {
            return Err(OmegaError::RatioOutOfRange);
        }
        Ok(Self { base, ratio })
    }

    /// Dyadic level of `n`, if `n ∈ A_s`.
    pub fn level(&self, n: u64) -> Option<u32> {
        self.base.index_of(n).map(|j| j.trailing_zeros())
    }

    pub fn value_at(&self, n: u64) -> Rational {
        self.truncated_value_at(n, None)
    }

    /// Value with every level above `truncation` set to zero.
    pub fn truncated_value_at(&self, n: u64, truncation: Option<u32>) -> Rational {
        match self.level(n) {
            Some(m) if truncation.is_none_or(|t| m <= t) => ladder(&self.ratio, m),
            _ => Rational::zero(),
        }
    }

    pub fn eval_prefix(&self, len: usize, truncation: Option<u32>) -> Vec<Rational> {
        (1..=len as u64).map(|n| self.truncated_value_at(n, truncation)).collect()
    }
}

pub fn ladder(ratio: &Rational, m: u32) -> Rational {
    num_traits::pow(ratio.clone(), m as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceReport {
    #[serde(serialize_with = "rational::serde_str::serialize")]
    pub distance: Rational,
    /// An index `n ∈ A_s^0 \ A_t` where the two vectors differ by 1.
    pub witness: Option<u64>,
    pub shared_prefix: Option<usize>,
}

/// `‖x_s − x_t‖_∞`. Both vectors take values in `[0, 1]`, so the distance is
/// at most 1, and the witness attains it.
pub fn pairwise_distance(x: &OmegaVector, y: &OmegaVector) -> Result<DistanceReport, OmegaError> {
    if x.ratio != y.ratio {
        return Err(OmegaError::RatioMismatch);
    }
    let Some(shared) = x.base.label.common_prefix_len(&y.base.label) else {
        return Ok(DistanceReport { distance: Rational::zero(), witness: None, shared_prefix: None });
    };
    // The second copy in the first unshared block has odd index 2^k + 1.
    let k = shared as u32 + 1;
    let n = x.base.nth((1u64 << k) + 1);
    debug_assert!(!y.base.contains(n));
    let gap = (x.value_at(n) - y.value_at(n)).abs();
    Ok(DistanceReport { distance: gap, witness: Some(n), shared_prefix: Some(shared) })
}

/// `Σ a_k x_{s_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaCombination {
    pub terms: Vec<OmegaTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaTerm {
    #[serde(serialize_with = "rational::serde_str::serialize")]
    pub coef: Rational,
    pub vector: OmegaVector,
}

impl OmegaCombination {
    pub fn new(terms: Vec<(Rational, OmegaVector)>) -> Result<Self, OmegaError> {
        if terms.iter().any(|(a, _)| a.is_zero()) {
            return Err(OmegaError::ZeroCoefficient);
        }
        Ok(Self {
            terms: terms.into_iter().map(|(coef, vector)| OmegaTerm { coef, vector }).collect(),
        })
    }

    pub fn value_at(&self, n: u64, truncation: Option<u32>) -> Rational {
        self.terms
            .iter()
            .fold(Rational::zero(), |acc, t| acc + &t.coef * t.vector.truncated_value_at(n, truncation))
    }

    pub fn eval_prefix(&self, len: usize, truncation: Option<u32>) -> Vec<Rational> {
        (1..=len as u64).map(|n| self.value_at(n, truncation)).collect()
    }

    /// Last index where two bases overlap; beyond it at most one term is nonzero.
    pub fn burn_in(&self) -> u64 {
        let mut last = 0;
        for (i, a) in self.terms.iter().enumerate() {
            for b in &self.terms[i + 1..] {
                if let Some(l) = a.vector.base.label.common_prefix_len(&b.vector.base.label) {
                    last = last.max(block_base(l as u32 + 1) - 1);
                } else {
                    return u64::MAX;
                }
            }
        }
        last
    }

    /// Whether `q` lies in `{a_k r^m : k, m ≥ 0} ∪ {0}`.
    pub fn is_limit_value(&self, q: &Rational) -> bool {
        if q.is_zero() {
            return true;
        }
        self.terms.iter().any(|t| {
            let v = q / &t.coef;
            if !v.is_positive() || v > Rational::one() {
                return false;
            }
            let mut cur = Rational::one();
            while cur > v {
                cur *= &t.vector.ratio;
            }
            cur == v
        })
    }
}

/// `{a_k r^m : k, m ≤ truncation} ∪ {0}`.
pub fn omega_combination_limits(c: &OmegaCombination, truncation: u32) -> BTreeSet<Rational> {
    let mut out: BTreeSet<Rational> = c
        .terms
        .iter()
        .flat_map(|t| (0..=truncation).map(move |m| &t.coef * ladder(&t.vector.ratio, m)))
        .collect();
    out.insert(Rational::zero());
    out
}
