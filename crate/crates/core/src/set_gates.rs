//! Prescribed cardinality sets `A ⊆ ℕ\{1}` and the shift-intersection gates
//! `|A ∩ (A − k)| = ∞` that every lineable (resp. densely lineable) `L(A)`
//! must pass.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::index_sets::{EventuallyPeriodicSet, IndexSetError, MAX_MODULUS};
use crate::rational::{self, Rational};
use crate::rules::{IntSequence, Polynomial, RuleError};
use crate::step_seq::CardinalityClass;

/// Members listed as evidence for an infinite intersection.
const EVIDENCE_LEN: usize = 5;
/// Explicit enumeration of a finite set is refused beyond this bound.
const MAX_FINITE_SCAN: u64 = 50_000_000;

pub const NECESSARY_NOTE: &str = "necessary condition only; passing does not establish lineability";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GateError {
    #[error("shift k must be at least 1")]
    ZeroShift,
    #[error("prescribed sets must not contain 1")]
    ContainsOne,
    #[error("invalid gaps: {0}")]
    InvalidGaps(RuleError),
    #[error("invalid rule: {0}")]
    Rule(#[from] RuleError),
    #[error(transparent)]
    IndexSet(#[from] IndexSetError),
    #[error("exponential image needs c ≥ 1 and base ≥ 2")]
    BadExponential,
    #[error("start index must be at least 1")]
    BadStart,
    #[error("set too large to decide exactly: {0}")]
    TooLarge(&'static str),
}

/// `[2, ∞) \ ⋃_{k ∈ 𝓚} [n_k, n_{k+1})`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapComplement {
    pub rule: IntSequence,
    pub removed: EventuallyPeriodicSet,
}

impl GapComplement {
    pub fn contains(&self, n: u64) -> bool {
        if n < 2 {
            return false;
        }
        match self.rule.bracket(n) {
            None => true,
            Some(k) => !self.removed.contains(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrescribedSet {
    ApUnion(EventuallyPeriodicSet),
    /// `{p(n) : n ≥ start}`
    PolynomialImage { poly: Polynomial, start: u64 },
    /// `{c · base^n : n ≥ start}`
    ExponentialImage { c: u64, base: u64, start: u64 },
    GapComplement(GapComplement),
    ExplicitFinite(BTreeSet<u64>),
}

impl PrescribedSet {
    pub fn ap_union(set: EventuallyPeriodicSet) -> Result<Self, GateError> {
        if set.contains(1) {
            return Err(GateError::ContainsOne);
        }
        Ok(PrescribedSet::ApUnion(set))
    }

    pub fn polynomial_image(coeffs: Vec<Rational>, start: u64) -> Result<Self, GateError> {
        if start == 0 {
            return Err(GateError::BadStart);
        }
        let poly = Polynomial::new(coeffs);
        poly.check_integer_valued(start)?;
        poly.check_strictly_increasing(start)?;
        if poly.eval_int(start) < BigInt::from(2) {
            return Err(GateError::ContainsOne);
        }
        Ok(PrescribedSet::PolynomialImage { poly, start })
    }

    pub fn exponential_image(c: u64, base: u64, start: u64) -> Result<Self, GateError> {
        if c == 0 || base < 2 {
            return Err(GateError::BadExponential);
        }
        if start == 0 {
            return Err(GateError::BadStart);
        }
        if c.saturating_mul(base.checked_pow(start as u32).unwrap_or(u64::MAX)) < 2 {
            return Err(GateError::ContainsOne);
        }
        Ok(PrescribedSet::ExponentialImage { c, base, start })
    }

    pub fn explicit_finite(members: impl IntoIterator<Item = u64>) -> Result<Self, GateError> {
        let set: BTreeSet<u64> = members.into_iter().collect();
        if set.contains(&0) {
            return Err(IndexSetError::NotNatural.into());
        }
        if set.contains(&1) {
            return Err(GateError::ContainsOne);
        }
        Ok(PrescribedSet::ExplicitFinite(set))
    }

    pub fn contains(&self, n: u64) -> bool {
        match self {
            PrescribedSet::ApUnion(s) => s.contains(n),
            PrescribedSet::PolynomialImage { poly, start } => poly_preimage(poly, *start, n).is_some(),
            PrescribedSet::ExponentialImage { c, base, start } => {
                if !n.is_multiple_of(*c) {
                    return false;
                }
                let mut q = n / c;
                let mut e = 0u64;
                while q > 1 && q.is_multiple_of(*base) {
                    q /= base;
                    e += 1;
                }
                q == 1 && e >= *start
            }
            PrescribedSet::GapComplement(g) => g.contains(n),
            PrescribedSet::ExplicitFinite(s) => s.contains(&n),
        }
    }

    pub fn members_up_to(&self, bound: u64) -> Vec<u64> {
        match self {
            PrescribedSet::ApUnion(s) => s.members_up_to(bound),
            PrescribedSet::ExplicitFinite(s) => s.range(..=bound).copied().collect(),
            _ => (2..=bound).filter(|&n| self.contains(n)).collect(),
        }
    }

    /// `A ∩ (A − k)` classified exactly.
    pub fn shift_intersection(&self, k: u64) -> Result<ShiftIntersection, GateError> {
        if k == 0 {
            return Err(GateError::ZeroShift);
        }
        match self {
            PrescribedSet::ApUnion(s) => Ok(periodic_shift(s, k)),
            PrescribedSet::ExplicitFinite(s) => {
                let members: Vec<u64> = s.iter().copied().filter(|&a| s.contains(&(a + k))).collect();
                Ok(ShiftIntersection::finite(members, GateReason::Finite))
            }
            PrescribedSet::PolynomialImage { poly, start } => {
                if poly.degree() == 1 {
                    let ap = linear_image_as_eps(poly, *start)?;
                    return Ok(periodic_shift(&ap, k));
                }
                let members = divergent_finite_part(k, *start, |n| poly.eval_int(n), || {
                    let gap = poly.forward_difference().sub_const(&Rational::from_integer(k.into()));
                    gap.eventually_positive_from(*start)
                        .map_err(GateError::Rule)?
                        .ok_or(GateError::TooLarge("gap polynomial"))
                })?;
                Ok(ShiftIntersection::finite(members, GateReason::GapDivergence))
            }
            PrescribedSet::ExponentialImage { c, base, start } => {
                let value = |n: u64| BigInt::from(*c) * num_traits::pow(BigInt::from(*base), n as usize);
                let members = divergent_finite_part(k, *start, value, || {
                    // gap c·b^n·(b − 1) > k from here on
                    let mut n = *start;
                    while value(n) * BigInt::from(base - 1) <= BigInt::from(k) {
                        n += 1;
                    }
                    Ok(n)
                })?;
                Ok(ShiftIntersection::finite(members, GateReason::GapDivergence))
            }
            PrescribedSet::GapComplement(g) => gap_complement_shift(g, k),
        }
    }

    /// Whether the consecutive gaps of the set tend to infinity.
    pub fn is_gap_divergent(&self) -> bool {
        match self {
            PrescribedSet::PolynomialImage { poly, .. } => poly.degree() >= 2,
            PrescribedSet::ExponentialImage { .. } => true,
            _ => false,
        }
    }
}

impl fmt::Display for PrescribedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrescribedSet::ApUnion(s) => write!(f, "{s}"),
            PrescribedSet::PolynomialImage { poly, start } => write!(f, "{poly}@{start}"),
            PrescribedSet::ExponentialImage { c, base, start } => write!(f, "exp({c},{base})@{start}"),
            PrescribedSet::GapComplement(g) => write!(f, "gaps({}; K={})", g.rule, g.removed),
            PrescribedSet::ExplicitFinite(s) => {
                let items: Vec<String> = s.iter().map(|n| n.to_string()).collect();
                write!(f, "finite{{{}}}", items.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateReason {
    GapDivergence,
    Parity,
    Periodicity,
    Finite,
    /// Infinitely many long runs survive the removed intervals.
    LongRuns,
    /// No witness up to `k_max`; larger shifts were not examined.
    BoundedSearch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShiftIntersection {
    pub class: CardinalityClass,
    /// Complete member list when finite, otherwise the first few members.
    pub members: Vec<u64>,
    pub reason: GateReason,
}

impl ShiftIntersection {
    fn finite(members: Vec<u64>, reason: GateReason) -> Self {
        Self { class: CardinalityClass::Finite(members.len() as u64), members, reason }
    }
}

pub fn shift_intersection(a: &PrescribedSet, k: u64) -> Result<CardinalityClass, GateError> {
    Ok(a.shift_intersection(k)?.class)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gate {
    LineableNecessary,
    DenselyLineableNecessary,
}

/// What a verdict says about `L(A)` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    /// The gate fails decidably, so the property fails for `L(A)`.
    Excluded,
    /// The gate passes; whether `L(A)` has the property stays open.
    Open,
    /// No shift up to `k_max` works; larger shifts were not examined.
    Inconclusive,
}

impl Conclusion {
    fn of(holds: bool, reason: GateReason) -> Self {
        match (holds, reason) {
            (true, _) => Conclusion::Open,
            (false, GateReason::BoundedSearch) => Conclusion::Inconclusive,
            (false, _) => Conclusion::Excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GateVerdict {
    pub gate: Gate,
    pub holds: bool,
    pub conclusion: Conclusion,
    pub witness_k: Option<u64>,
    pub evidence: Vec<u64>,
    pub reason: GateReason,
    pub note: &'static str,
}

pub fn lineable_gate(a: &PrescribedSet, k_max: u64) -> Result<GateVerdict, GateError> {
    let verdict = |holds, witness_k, evidence, reason| GateVerdict {
        gate: Gate::LineableNecessary,
        holds,
        conclusion: Conclusion::of(holds, reason),
        witness_k,
        evidence,
        reason,
        note: NECESSARY_NOTE,
    };
    if a.is_gap_divergent() {
        return Ok(verdict(false, None, Vec::new(), GateReason::GapDivergence));
    }
    let mut last_reason = GateReason::BoundedSearch;
    for k in 1..=k_max.max(1) {
        let si = a.shift_intersection(k)?;
        if si.class.is_infinite() {
            return Ok(verdict(true, Some(k), si.members, si.reason));
        }
        last_reason = si.reason;
    }
    let reason = match a {
        PrescribedSet::ExplicitFinite(_) => GateReason::Finite,
        PrescribedSet::ApUnion(s) if !s.is_infinite() => GateReason::Finite,
        PrescribedSet::GapComplement(_) if last_reason == GateReason::Finite => GateReason::Finite,
        _ => GateReason::BoundedSearch,
    };
    Ok(verdict(false, None, Vec::new(), reason))
}

pub fn dense_gate(a: &PrescribedSet) -> Result<GateVerdict, GateError> {
    let si = a.shift_intersection(1)?;
    let holds = si.class.is_infinite();
    let reason = if holds { si.reason } else { failure_reason(a, si.reason) };
    Ok(GateVerdict {
        gate: Gate::DenselyLineableNecessary,
        holds,
        conclusion: Conclusion::of(holds, reason),
        witness_k: holds.then_some(1),
        evidence: if holds { si.members } else { Vec::new() },
        reason,
        note: NECESSARY_NOTE,
    })
}

fn failure_reason(a: &PrescribedSet, fallback: GateReason) -> GateReason {
    let single_parity = |s: &EventuallyPeriodicSet| {
        s.is_infinite() && {
            let m = s.modulus();
            m.is_multiple_of(2) && s.residues().iter().all(|r| r % 2 == s.residues()[0] % 2)
        }
    };
    match a {
        PrescribedSet::ApUnion(s) if single_parity(s) => GateReason::Parity,
        PrescribedSet::PolynomialImage { poly, start } if poly.degree() == 1 => {
            match linear_image_as_eps(poly, *start) {
                Ok(s) if single_parity(&s) => GateReason::Parity,
                _ => fallback,
            }
        }
        PrescribedSet::GapComplement(g) => match gap_complement_as_eps(g) {
            Some(Ok(s)) if single_parity(&s) => GateReason::Parity,
            _ => fallback,
        },
        _ => fallback,
    }
}

/// `[2, ∞) \ ⋃_{k ∈ 𝓚} [n_k, n_{k+1})` with validated gaps.
pub fn gap_complement_build(rule: IntSequence, removed: EventuallyPeriodicSet) -> Result<PrescribedSet, GateError> {
    rule.validate().map_err(GateError::InvalidGaps)?;
    Ok(PrescribedSet::GapComplement(GapComplement { rule, removed }))
}

fn periodic_shift(s: &EventuallyPeriodicSet, k: u64) -> ShiftIntersection {
    let t = s.intersect(&s.shift_down(k));
    if t.is_infinite() {
        ShiftIntersection {
            class: CardinalityClass::CountablyInfinite,
            members: t.members().take(EVIDENCE_LEN).collect(),
            reason: GateReason::Periodicity,
        }
    } else {
        let members: Vec<u64> = t.members().collect();
        let reason = if s.is_infinite() { GateReason::Periodicity } else { GateReason::Finite };
        ShiftIntersection::finite(members, reason)
    }
}

/// Solves `p(m) = n` for `m ≥ start` on a strictly increasing `p`.
fn poly_preimage(poly: &Polynomial, start: u64, n: u64) -> Option<u64> {
    let target = BigInt::from(n);
    if poly.eval_int(start) > target {
        return None;
    }
    let mut lo = start;
    let mut step = 1u64;
    let mut hi = start + 1;
    while poly.eval_int(hi) <= target {
        lo = hi;
        step = step.saturating_mul(2);
        hi = hi.saturating_add(step);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if poly.eval_int(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (poly.eval_int(lo) == target).then_some(lo)
}

/// `{αn + β : n ≥ start}` as an eventually periodic set.
fn linear_image_as_eps(poly: &Polynomial, start: u64) -> Result<EventuallyPeriodicSet, GateError> {
    let first = poly.eval_int(start).to_u64().ok_or(GateError::TooLarge("image start"))?;
    let step = (poly.eval_int(start + 1) - poly.eval_int(start)).to_u64().ok_or(GateError::TooLarge("slope"))?;
    if step > MAX_MODULUS {
        return Err(GateError::TooLarge("slope"));
    }
    Ok(EventuallyPeriodicSet::from_periodic_fn(step, first, |n| n >= first && n % step == first % step))
}

/// Exact finite part of `A ∩ (A − k)` when consecutive gaps exceed `k` from
/// index `settle()` on.
fn divergent_finite_part(
    k: u64,
    start: u64,
    value: impl Fn(u64) -> BigInt,
    settle: impl FnOnce() -> Result<u64, GateError>,
) -> Result<Vec<u64>, GateError> {
    let settle = settle()?;
    if settle - start > MAX_FINITE_SCAN {
        return Err(GateError::TooLarge("gap settling index"));
    }
    let kk = BigInt::from(k);
    let mut members = Vec::new();
    for n in start..settle.max(start) {
        let a = value(n);
        let mut m = n + 1;
        loop {
            let d = value(m) - &a;
            if d == kk {
                members.push(a.to_u64().ok_or(GateError::TooLarge("member"))?);
            }
            if d >= kk {
                break;
            }
            m += 1;
        }
    }
    Ok(members)
}

/// Linear gap rules give an eventually periodic complement.
fn gap_complement_as_eps(g: &GapComplement) -> Option<Result<EventuallyPeriodicSet, GateError>> {
    let IntSequence::Poly(p) = &g.rule else { return None };
    if p.degree() != 1 {
        return None;
    }
    Some((|| {
        let alpha = (p.eval_int(2) - p.eval_int(1)).to_u64().ok_or(GateError::TooLarge("slope"))?;
        let modulus = alpha
            .checked_mul(g.removed.modulus())
            .filter(|&m| m <= MAX_MODULUS)
            .ok_or(GateError::TooLarge("period"))?;
        let start = g.rule.value(g.removed.threshold().max(1)).to_u64().ok_or(GateError::TooLarge("threshold"))?;
        let start = start.max(2);
        Ok(EventuallyPeriodicSet::from_periodic_fn(modulus, start, |n| g.contains(n)))
    })())
}

fn gap_complement_shift(g: &GapComplement, k: u64) -> Result<ShiftIntersection, GateError> {
    if let Some(eps) = gap_complement_as_eps(g) {
        let mut si = periodic_shift(&eps?, k);
        if !si.class.is_infinite() && si.members.is_empty() && !g.removed.complement().is_infinite() {
            si.reason = GateReason::Finite;
        }
        return Ok(si);
    }
    let kept = g.removed.complement();
    if kept.is_infinite() {
        // Every kept interval [n_j, n_{j+1}) longer than k contributes n_j.
        let mut members = Vec::new();
        let mut iter = kept.members();
        while members.len() < EVIDENCE_LEN {
            let j = iter.next().expect("infinite set");
            let lo = g.rule.value(j).max(BigInt::from(2));
            let hi = g.rule.value(j + 1);
            if &hi - &lo > BigInt::from(k) {
                members.push(lo.to_u64().ok_or(GateError::TooLarge("member"))?);
            }
        }
        return Ok(ShiftIntersection {
            class: CardinalityClass::CountablyInfinite,
            members,
            reason: GateReason::LongRuns,
        });
    }
    // Cofinitely many intervals removed: A ⊆ [2, n_{J+1}).
    let last_kept = kept.members().last().unwrap_or(0);
    let top = g.rule.value(last_kept + 1);
    if top.is_negative() || top > BigInt::from(MAX_FINITE_SCAN) {
        return Err(GateError::TooLarge("finite gap complement"));
    }
    let top = top.to_u64().unwrap_or(0);
    let members: Vec<u64> = (2..top).filter(|&a| g.contains(a) && g.contains(a + k)).collect();
    Ok(ShiftIntersection::finite(members, GateReason::Finite))
}

pub fn describe_coeffs(poly: &Polynomial) -> Vec<String> {
    poly.coeffs().iter().map(rational::format).collect()
}
