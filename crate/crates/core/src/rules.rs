//! Integer sequences `k ↦ n_k` (polynomial or exponential) and exact
//! polynomial utilities used by the set gates.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::{self, Rational};

/// Explicit checks beyond this many points are refused.
const MAX_SCAN: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("polynomial is not integer-valued from {0}")]
    NotIntegerValued(u64),
    #[error("sequence is not strictly increasing from {0}")]
    NotIncreasing(u64),
    #[error("sequence takes a nonpositive value")]
    NotPositive,
    #[error("exponential rule needs c ≥ 1 and base ≥ 2")]
    BadExponential,
    #[error("coefficients too large to certify monotonicity")]
    TooLarge,
}

/// Polynomial with rational coefficients, highest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        let first = coeffs.iter().position(|c| !c.is_zero()).unwrap_or(coeffs.len());
        let mut coeffs = coeffs[first..].to_vec();
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_int(&self, n: u64) -> BigInt {
        let v = self.eval(&Rational::from_integer(n.into()));
        debug_assert!(v.is_integer());
        v.to_integer()
    }

    /// `p(x + 1) − p(x)`.
    pub fn forward_difference(&self) -> Self {
        let d = self.degree();
        if d == 0 {
            return Self::new(vec![Rational::zero()]);
        }
        // p(x+1) via binomial expansion of each monomial.
        let mut shifted = vec![Rational::zero(); d + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            let power = d - i;
            let mut binom = BigInt::one();
            for j in 0..=power {
                // c·C(power, j)·x^(power−j)
                let idx = d - (power - j);
                shifted[idx] += c * Rational::from_integer(binom.clone());
                binom = binom * BigInt::from(power - j) / BigInt::from(j + 1);
            }
        }
        let diff: Vec<Rational> = shifted.iter().zip(&self.coeffs).map(|(a, b)| a - b).collect();
        Self::new(diff)
    }

    pub fn sub_const(&self, k: &Rational) -> Self {
        let mut c = self.coeffs.clone();
        *c.last_mut().unwrap() -= k;
        Self::new(c)
    }

    /// Smallest `N ≥ from` with `p(n) > 0` for every integer `n ≥ N`, or
    /// `None` when the leading coefficient is not positive.
    pub fn eventually_positive_from(&self, from: u64) -> Result<Option<u64>, RuleError> {
        let lead = &self.coeffs[0];
        if !lead.is_positive() {
            return Ok(None);
        }
        // Cauchy bound: every real root has |x| < 1 + max |a_i / a_d|.
        let bound = self.coeffs[1..]
            .iter()
            .map(|c| (c / lead).abs())
            .max()
            .unwrap_or_else(Rational::zero)
            + Rational::one();
        let bound = bound.ceil().to_integer().to_u64().ok_or(RuleError::TooLarge)?;
        let top = bound.max(from);
        if top - from > MAX_SCAN {
            return Err(RuleError::TooLarge);
        }
        // Walk down from the bound to the last nonpositive value.
        let mut n = top;
        while n > from && self.eval_int_any(n - 1).is_positive() {
            n -= 1;
        }
        Ok(Some(n))
    }

    fn eval_int_any(&self, n: u64) -> Rational {
        self.eval(&Rational::from_integer(n.into()))
    }

    /// Integer-valued on all `n ≥ from`: checked at `degree + 1` consecutive points.
    pub fn check_integer_valued(&self, from: u64) -> Result<(), RuleError> {
        for n in from..=from + self.degree() as u64 {
            if !self.eval_int_any(n).is_integer() {
                return Err(RuleError::NotIntegerValued(from));
            }
        }
        Ok(())
    }

    pub fn check_strictly_increasing(&self, from: u64) -> Result<(), RuleError> {
        let diff = self.forward_difference();
        match diff.eventually_positive_from(from)? {
            Some(n) if n == from => Ok(()),
            _ => Err(RuleError::NotIncreasing(from)),
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<String> = self.coeffs.iter().map(rational::format).collect();
        write!(f, "poly({})", cs.join(","))
    }
}

/// A strictly increasing positive integer sequence indexed by `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntSequence {
    Poly(Polynomial),
    /// `c · base^k`
    Exp { c: u64, base: u64 },
}

impl IntSequence {
    pub fn poly(coeffs: Vec<Rational>) -> Result<Self, RuleError> {
        let s = IntSequence::Poly(Polynomial::new(coeffs));
        s.validate()?;
        Ok(s)
    }

    pub fn exp(c: u64, base: u64) -> Result<Self, RuleError> {
        let s = IntSequence::Exp { c, base };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        match self {
            IntSequence::Poly(p) => {
                p.check_integer_valued(1)?;
                p.check_strictly_increasing(1)?;
                if !p.eval_int(1).is_positive() {
                    return Err(RuleError::NotPositive);
                }
                Ok(())
            }
            IntSequence::Exp { c, base } => {
                if *c == 0 || *base < 2 {
                    Err(RuleError::BadExponential)
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn value(&self, k: u64) -> BigInt {
        match self {
            IntSequence::Poly(p) => p.eval_int(k),
            IntSequence::Exp { c, base } => BigInt::from(*c) * num_traits::pow(BigInt::from(*base), k as usize),
        }
    }

    /// `n_k` as a `u64`, saturating.
    pub fn value_u64(&self, k: u64) -> u64 {
        self.value(k).to_u64().unwrap_or(u64::MAX)
    }

    /// Whether the gaps `n_{k+1} − n_k` tend to infinity.
    pub fn gaps_diverge(&self) -> bool {
        match self {
            IntSequence::Poly(p) => p.degree() >= 2,
            IntSequence::Exp { .. } => true,
        }
    }

    /// The `k` with `n_k ≤ n < n_{k+1}`, or `None` when `n < n_1`.
    pub fn bracket(&self, n: u64) -> Option<u64> {
        let target = BigInt::from(n);
        if self.value(1) > target {
            return None;
        }
        let mut lo = 1u64;
        let mut hi = 2u64;
        while self.value(hi) <= target {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.value(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Least `k ≥ 1` with `n_k > bound`.
    pub fn first_exceeding(&self, bound: &BigInt) -> u64 {
        let mut k = 1;
        while &self.value(k) <= bound {
            k += 1;
        }
        k
    }
}

impl fmt::Display for IntSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntSequence::Poly(p) => write!(f, "{p}"),
            IntSequence::Exp { c, base } if *c == 1 => write!(f, "{base}^k"),
            IntSequence::Exp { c, base } => write!(f, "{c}*{base}^k"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn forward_difference_of_square() {
        let sq = Polynomial::new(vec![int(1), int(0), int(0)]);
        assert_eq!(sq.forward_difference(), Polynomial::new(vec![int(2), int(1)]));
        let cube = Polynomial::new(vec![int(1), int(0), int(0), int(0)]);
        for n in 0..20u64 {
            let d = cube.forward_difference().eval_int(n);
            assert_eq!(d, cube.eval_int(n + 1) - cube.eval_int(n));
        }
    }

    #[test]
    fn integer_valued_check() {
        // n(n+1)/2 is integer-valued with rational coefficients
        let tri = Polynomial::new(vec![ratio(1, 2), ratio(1, 2), int(0)]);
        assert!(tri.check_integer_valued(1).is_ok());
        let half = Polynomial::new(vec![ratio(1, 2), int(0)]);
        assert!(half.check_integer_valued(1).is_err());
    }

    #[test]
    fn monotonicity_from_root_bound() {
        // (n − 5)² is decreasing until 5
        let p = Polynomial::new(vec![int(1), int(-10), int(25)]);
        assert!(p.check_strictly_increasing(1).is_err());
        assert!(p.check_strictly_increasing(5).is_ok());
        assert!(Polynomial::new(vec![int(3)]).check_strictly_increasing(1).is_err());
    }

    #[test]
    fn bracket_finds_interval() {
        let sq = IntSequence::poly(vec![int(1), int(0), int(0)]).unwrap();
        assert_eq!(sq.bracket(5), Some(2));
        assert_eq!(sq.bracket(9), Some(3));
        assert_eq!(sq.bracket(1), Some(1));
        let e = IntSequence::exp(1, 2).unwrap();
        assert_eq!(e.bracket(1), None);
        assert_eq!(e.bracket(7), Some(2));
        assert_eq!(sq.first_exceeding(&BigInt::from(36)), 7);
    }
}
