//! Eventually periodic subsets of ℕ = {1, 2, 3, …}.
//!
//! A set is stored as a residue pattern modulo `modulus` plus two finite
//! exception lists. Membership of `n` is decided as
//!
//! 1. `n ∈ added` → member,
//! 2. `n ∈ removed` → not a member,
//! 3. otherwise `n mod modulus ∈ residues`.
//!
//! Every constructor canonicalizes: the modulus is the minimal period of the
//! residue pattern and the exception lists contain only entries that
//! disagree with the pattern. Two values describing the same subset of ℕ are
//! therefore structurally equal. The threshold is derived as one past the
//! largest exception.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest modulus a set operation is allowed to expand to.
pub const MAX_MODULUS: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexSetError {
    #[error("modulus must be positive")]
    InvalidModulus,
    #[error("residue {residue} is not below modulus {modulus}")]
    ResidueOutOfRange { residue: u64, modulus: u64 },
    #[error("0 is not a natural number here (ℕ starts at 1)")]
    NotNatural,
    #[error("{0} is listed as both added and removed")]
    ConflictingExceptions(u64),
    #[error("requested {requested} elements but the set only has {available}")]
    InsufficientElements { requested: usize, available: usize },
    #[error("set is finite")]
    NotInfinite,
    #[error("modulus {0} exceeds the supported maximum")]
    ModulusTooLarge(u128),
    #[error("threshold {given} is below the largest exception bound {required}")]
    ThresholdTooSmall { given: u64, required: u64 },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "EpsJson", into = "EpsJson")]
pub struct EventuallyPeriodicSet {
    modulus: u64,
    residues: Vec<u64>,
    added: BTreeSet<u64>,
    removed: BTreeSet<u64>,
}

impl EventuallyPeriodicSet {
    /// Builds `{n : n mod modulus ∈ residues}`, then applies the exceptions.
    pub fn new(
        residues: impl IntoIterator<Item = u64>,
        modulus: u64,
        added: impl IntoIterator<Item = u64>,
        removed: impl IntoIterator<Item = u64>,
    ) -> Result<Self, IndexSetError> {
        if modulus == 0 {
            return Err(IndexSetError::InvalidModulus);
        }
        if modulus > MAX_MODULUS {
            return Err(IndexSetError::ModulusTooLarge(modulus as u128));
        }
        let residues: BTreeSet<u64> = residues.into_iter().collect();
        if let Some(&r) = residues.iter().find(|&&r| r >= modulus) {
            return Err(IndexSetError::ResidueOutOfRange { residue: r, modulus });
        }
        let added: BTreeSet<u64> = added.into_iter().collect();
        let removed: BTreeSet<u64> = removed.into_iter().collect();
        if added.contains(&0) || removed.contains(&0) {
            return Err(IndexSetError::NotNatural);
        }
        if let Some(&n) = added.intersection(&removed).next() {
            return Err(IndexSetError::ConflictingExceptions(n));
        }
        let mut set = Self {
            modulus,
            residues: residues.into_iter().collect(),
            added,
            removed,
        };
        set.canonicalize();
        Ok(set)
    }

    pub fn naturals() -> Self {
        Self::residue_class(0, 1)
    }

    pub fn empty() -> Self {
        Self::from_raw(1, Vec::new(), BTreeSet::new(), BTreeSet::new())
    }

    /// `{n ∈ ℕ : n ≡ residue (mod modulus)}`. Panics on a zero modulus.
    pub fn residue_class(residue: u64, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Self::new([residue % modulus], modulus, [], []).expect("valid residue class")
    }

    /// Union of residue classes modulo `modulus`.
    pub fn residues_mod(residues: impl IntoIterator<Item = u64>, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Self::new(residues.into_iter().map(|r| r % modulus), modulus, [], [])
            .expect("valid residue union")
    }

    pub fn finite(members: impl IntoIterator<Item = u64>) -> Result<Self, IndexSetError> {
        Self::new([], 1, members, [])
    }

    fn from_raw(modulus: u64, residues: Vec<u64>, added: BTreeSet<u64>, removed: BTreeSet<u64>) -> Self {
        let mut set = Self {
            modulus,
            residues,
            added,
            removed,
        };
        set.canonicalize();
        set
    }

    /// Builds a set from a membership predicate that is periodic with
    /// period `modulus` for every `n ≥ start`.
    pub(crate) fn from_periodic_fn(modulus: u64, start: u64, member: impl Fn(u64) -> bool) -> Self {
        assert!(modulus > 0 && modulus <= MAX_MODULUS, "modulus {modulus} out of range");
        let start = start.max(1);
        let mut residues: Vec<u64> = (start..start + modulus)
            .filter(|&n| member(n))
            .map(|n| n % modulus)
            .collect();
        residues.sort_unstable();
        let mut added = BTreeSet::new();
        let mut removed = BTreeSet::new();
        for n in 1..start {
            let pattern = residues.binary_search(&(n % modulus)).is_ok();
            match (member(n), pattern) {
                (true, false) => {
                    added.insert(n);
                }
                (false, true) => {
                    removed.insert(n);
                }
                _ => {}
            }
        }
        Self::from_raw(modulus, residues, added, removed)
    }

    fn canonicalize(&mut self) {
        if self.residues.is_empty() {
            self.modulus = 1;
        } else {
            let modulus = self.modulus;
            let lookup: HashSet<u64> = self.residues.iter().copied().collect();
            let period = divisors(modulus)
                .into_iter()
                .find(|&d| {
                    d == modulus
                        || self
                            .residues
                            .iter()
                            .all(|&r| lookup.contains(&((r + d) % modulus)))
                })
                .unwrap_or(modulus);
            if period != modulus {
                self.residues.retain(|&r| r < period);
                self.modulus = period;
            }
        }
        let (modulus, residues) = (self.modulus, &self.residues);
        let in_pattern = |n: u64| residues.binary_search(&(n % modulus)).is_ok();
        self.added.retain(|&n| !in_pattern(n));
        self.removed.retain(|&n| in_pattern(n));
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn added(&self) -> &BTreeSet<u64> {
        &self.added
    }

    pub fn removed(&self) -> &BTreeSet<u64> {
        &self.removed
    }

    /// Smallest `t` such that membership of every `n ≥ t` follows the residue pattern.
    pub fn threshold(&self) -> u64 {
        let top = self.added.iter().next_back().copied().unwrap_or(0);
        let top = top.max(self.removed.iter().next_back().copied().unwrap_or(0));
        top + 1
    }

    fn pattern_contains(&self, n: u64) -> bool {
        self.residues.binary_search(&(n % self.modulus)).is_ok()
    }

    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        if self.added.contains(&n) {
            return true;
        }
        if self.removed.contains(&n) {
            return false;
        }
        self.pattern_contains(n)
    }

    pub fn is_infinite(&self) -> bool {
        !self.residues.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty() && self.added.is_empty()
    }

    /// Number of elements, or `None` for an infinite set.
    pub fn cardinality(&self) -> Option<usize> {
        if self.is_infinite() {
            None
        } else {
            Some(self.added.len())
        }
    }

    /// Members in increasing order.
    pub fn members(&self) -> Members<'_> {
        Members {
            set: self,
            next: 1,
            threshold: self.threshold(),
        }
    }

    /// The first `count` members in increasing order.
    pub fn enumerate(&self, count: usize) -> Result<Vec<u64>, IndexSetError> {
        if let Some(total) = self.cardinality() {
            if count > total {
                return Err(IndexSetError::InsufficientElements {
                    requested: count,
                    available: total,
                });
            }
        }
        Ok(self.members().take(count).collect())
    }

    /// Members `≤ bound`.
    pub fn members_up_to(&self, bound: u64) -> Vec<u64> {
        self.members().take_while(|&n| n <= bound).collect()
    }

    fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        let modulus = lcm_checked(self.modulus, other.modulus)
            .filter(|&m| m <= MAX_MODULUS)
            .unwrap_or_else(|| panic!("lcm({}, {}) exceeds MAX_MODULUS", self.modulus, other.modulus));
        let start = self.threshold().max(other.threshold());
        Self::from_periodic_fn(modulus, start, |n| op(self.contains(n), other.contains(n)))
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && !b)
    }

    /// ℕ minus this set.
    pub fn complement(&self) -> Self {
        Self::from_periodic_fn(self.modulus, self.threshold(), |n| !self.contains(n))
    }

    /// `{n ∈ ℕ : n + k ∈ self}`, i.e. the set `A − k` restricted to ℕ.
    pub fn shift_down(&self, k: u64) -> Self {
        let start = self.threshold().saturating_sub(k);
        Self::from_periodic_fn(self.modulus, start, |n| self.contains(n + k))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersect(other).is_empty()
    }

    /// Members whose 1-based enumeration index has 2-adic valuation `m`.
    ///
    /// The cells for `m = 0, 1, 2, …` are pairwise disjoint, each infinite,
    /// and together cover the whole set. Cell `m` is periodic with period
    /// `modulus · 2^(m+1)`.
    pub fn dyadic_cell(&self, m: u32) -> Result<Self, IndexSetError> {
        if !self.is_infinite() {
            return Err(IndexSetError::NotInfinite);
        }
        let period = 1u128
            .checked_shl(m + 1)
            .map(|p| p * self.modulus as u128)
            .filter(|&p| p <= MAX_MODULUS as u128)
            .ok_or(IndexSetError::ModulusTooLarge((self.modulus as u128) << (m + 1).min(100)))?
            as u64;
        let start = self.threshold();
        let end = start + period;
        let selected: HashSet<u64> = self
            .members()
            .take_while(|&n| n < end)
            .zip(1u64..)
            .filter(|&(_, index)| index.trailing_zeros() == m)
            .map(|(n, _)| n)
            .collect();
        Ok(Self::from_periodic_fn(period, start, |n| selected.contains(&n)))
    }
}

pub struct Members<'a> {
    set: &'a EventuallyPeriodicSet,
    next: u64,
    threshold: u64,
}

impl Iterator for Members<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let set = self.set;
        while self.next < self.threshold {
            let n = self.next;
            self.next += 1;
            if set.contains(n) {
                return Some(n);
            }
        }
        if set.residues.is_empty() {
            return None;
        }
        // Periodic regime: jump straight to the next matching residue.
        let n = self.next;
        let base = n - n % set.modulus;
        let r = n % set.modulus;
        let candidate = match set.residues.iter().find(|&&x| x >= r) {
            Some(&x) => base + x,
            None => base + set.modulus + set.residues[0],
        };
        self.next = candidate + 1;
        Some(candidate)
    }
}

impl fmt::Debug for EventuallyPeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EPS({self})")
    }
}

impl fmt::Display for EventuallyPeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &mut dyn Iterator<Item = &u64>| xs.map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        if self.residues.is_empty() {
            write!(f, "{{{}}}", list(&mut self.added.iter()))?;
            return Ok(());
        }
        if self.modulus == 1 {
            write!(f, "ℕ")?;
        } else {
            write!(f, "{{≡{} mod {}}}", list(&mut self.residues.iter()), self.modulus)?;
        }
        if !self.added.is_empty() {
            write!(f, "∪{{{}}}", list(&mut self.added.iter()))?;
        }
        if !self.removed.is_empty() {
            write!(f, "∖{{{}}}", list(&mut self.removed.iter()))?;
        }
        Ok(())
    }
}

/// Wire form: `{"mod": m, "res": [...], "add": [...], "rem": [...], "thr": t}`.
///
/// `thr` is informational on input: it must be at least one past every
/// exception, and below it non-exceptional members still follow the
/// residue pattern.
#[derive(Serialize, Deserialize)]
struct EpsJson {
    #[serde(rename = "mod")]
    modulus: u64,
    res: Vec<u64>,
    #[serde(default)]
    add: Vec<u64>,
    #[serde(default)]
    rem: Vec<u64>,
    #[serde(default)]
    thr: Option<u64>,
}

impl TryFrom<EpsJson> for EventuallyPeriodicSet {
    type Error = IndexSetError;

    fn try_from(j: EpsJson) -> Result<Self, Self::Error> {
        let required = j.add.iter().chain(&j.rem).max().map_or(1, |m| m + 1);
        if let Some(t) = j.thr {
            if t < required {
                return Err(IndexSetError::ThresholdTooSmall { given: t, required });
            }
        }
        Self::new(j.res, j.modulus, j.add, j.rem)
    }
}

impl From<EventuallyPeriodicSet> for EpsJson {
    fn from(s: EventuallyPeriodicSet) -> Self {
        let thr = s.threshold();
        EpsJson {
            modulus: s.modulus,
            res: s.residues,
            add: s.added.into_iter().collect(),
            rem: s.removed.into_iter().collect(),
            thr: Some(thr),
        }
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm_checked(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn evens() -> EventuallyPeriodicSet {
        EventuallyPeriodicSet::residue_class(0, 2)
    }

    fn odds() -> EventuallyPeriodicSet {
        EventuallyPeriodicSet::residue_class(1, 2)
    }

    #[test]
    fn make_ap_examples() {
        let e = EventuallyPeriodicSet::new([0], 2, [], []).unwrap();
        assert_eq!(e.enumerate(4).unwrap(), vec![2, 4, 6, 8]);
        let all = EventuallyPeriodicSet::new([0, 1], 2, [], []).unwrap();
        assert_eq!(all, EventuallyPeriodicSet::naturals());
        assert_eq!(all.modulus(), 1);

        let s = EventuallyPeriodicSet::new([1], 2, [2], [1]).unwrap();
        assert_eq!(s.modulus(), 2);
        let direct: Vec<u64> = (1..=40).filter(|&n| (n % 2 == 1 && n != 1) || n == 2).take(20).collect();
        assert_eq!(s.enumerate(20).unwrap(), direct);
    }

    #[test]
    fn zero_modulus_is_rejected() {
        assert_eq!(
            EventuallyPeriodicSet::new([0], 0, [], []),
            Err(IndexSetError::InvalidModulus)
        );
        assert!(matches!(
            EventuallyPeriodicSet::new([3], 3, [], []),
            Err(IndexSetError::ResidueOutOfRange { .. })
        ));
        assert_eq!(
            EventuallyPeriodicSet::new([0], 2, [3], [3]),
            Err(IndexSetError::ConflictingExceptions(3))
        );
    }

    #[test]
    fn intersect_examples() {
        let none = evens().intersect(&odds());
        assert!(none.is_empty());
        assert!(!none.is_infinite());

        let one_mod_four = EventuallyPeriodicSet::residue_class(1, 4);
        let both = one_mod_four.intersect(&odds());
        assert!(both.is_infinite());
        for n in 1..=100 {
            assert_eq!(both.contains(n), n % 4 == 1);
        }
        assert_eq!(both, one_mod_four);

        let six = EventuallyPeriodicSet::residue_class(0, 6);
        let four = EventuallyPeriodicSet::residue_class(0, 4);
        let twelve = six.intersect(&four);
        // brute-force CRT over residues mod 12
        let expected: Vec<u64> = (0..12).filter(|r| r % 6 == 0 && r % 4 == 0).collect();
        assert_eq!(twelve.residues(), expected.as_slice());
        assert_eq!(twelve.modulus(), 12);
        assert!(twelve.is_infinite());
    }

    #[test]
    fn is_infinite_examples() {
        assert!(EventuallyPeriodicSet::naturals().is_infinite());
        let fin = EventuallyPeriodicSet::finite([1, 2, 3]).unwrap();
        assert!(!fin.is_infinite());
        assert_eq!(fin.cardinality(), Some(3));
        let holes = EventuallyPeriodicSet::new([0], 2, [], [2, 4, 6]).unwrap();
        assert!(holes.is_infinite());
        assert_eq!(holes.enumerate(2).unwrap(), vec![8, 10]);
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(odds().enumerate(3).unwrap(), vec![1, 3, 5]);
        assert_eq!(
            EventuallyPeriodicSet::empty().enumerate(1),
            Err(IndexSetError::InsufficientElements { requested: 1, available: 0 })
        );
        let s = EventuallyPeriodicSet::new([2], 5, [7], []).unwrap();
        let direct: Vec<u64> = (1..=20).filter(|&n| n % 5 == 2).take(4).collect();
        assert_eq!(s.enumerate(4).unwrap(), direct);
        assert_eq!(direct, vec![2, 7, 12, 17]);
    }

    fn valuation_cell_oracle(members: &[u64], m: u32) -> Vec<u64> {
        members
            .iter()
            .enumerate()
            .filter(|(i, _)| ((i + 1) as u64).trailing_zeros() == m)
            .map(|(_, &n)| n)
            .collect()
    }

    #[test]
    fn dyadic_cell_examples() {
        let nat = EventuallyPeriodicSet::naturals();
        let cell0 = nat.dyadic_cell(0).unwrap();
        let members: Vec<u64> = (1..=64).collect();
        let expected = valuation_cell_oracle(&members, 0);
        assert_eq!(cell0.members_up_to(64), expected);
        assert_eq!(&expected[..3], &[1, 3, 5]);

        let e0 = evens().dyadic_cell(0).unwrap();
        let e1 = evens().dyadic_cell(1).unwrap();
        assert!(e0.is_disjoint(&e1));

        let o2 = odds().dyadic_cell(2).unwrap();
        assert!(o2.is_infinite());
        assert!(o2.members_up_to(200).len() >= 8);
        assert_eq!(o2.modulus(), 2 * 8);

        assert_eq!(
            EventuallyPeriodicSet::finite([3]).unwrap().dyadic_cell(0),
            Err(IndexSetError::NotInfinite)
        );
    }

    #[test]
    fn dyadic_cells_with_exceptions_match_oracle() {
        let a = EventuallyPeriodicSet::new([1, 4], 6, [2, 9], [1, 13]).unwrap();
        let members = a.enumerate(256).unwrap();
        for m in 0..5 {
            let cell = a.dyadic_cell(m).unwrap();
            let bound = *members.last().unwrap();
            assert_eq!(cell.members_up_to(bound), valuation_cell_oracle(&members, m));
        }
    }

    #[test]
    fn json_shape() {
        let s = EventuallyPeriodicSet::new([1], 2, [2], [1]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"mod":2,"res":[1],"add":[2],"rem":[1],"thr":3}"#);
        let back: EventuallyPeriodicSet = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::from_str::<EventuallyPeriodicSet>(r#"{"mod":0,"res":[]}"#);
        assert!(bad.is_err());
        let low_thr = serde_json::from_str::<EventuallyPeriodicSet>(r#"{"mod":2,"res":[0],"add":[5],"thr":3}"#);
        assert!(low_thr.is_err());
    }

    #[test]
    fn shift_down_matches_definition() {
        let a = EventuallyPeriodicSet::new([0, 3], 7, [1, 2], [14]).unwrap();
        for k in 0..10 {
            let s = a.shift_down(k);
            for n in 1..200 {
                assert_eq!(s.contains(n), a.contains(n + k), "k={k} n={n}");
            }
        }
    }

    fn arb_set() -> impl Strategy<Value = EventuallyPeriodicSet> {
        (1u64..=12)
            .prop_flat_map(|m| {
                (
                    Just(m),
                    proptest::collection::btree_set(0..m, 0..=m as usize),
                    proptest::collection::btree_set(1u64..30, 0..4),
                    proptest::collection::btree_set(1u64..30, 0..4),
                )
            })
            .prop_map(|(m, res, add, rem)| {
                let rem: Vec<u64> = rem.difference(&add).copied().collect();
                EventuallyPeriodicSet::new(res, m, add, rem).unwrap()
            })
    }

    proptest! {
        #[test]
        fn boolean_ops_agree_with_membership(a in arb_set(), b in arb_set()) {
            let i = a.intersect(&b);
            let u = a.union(&b);
            let d = a.difference(&b);
            let c = a.complement();
            let bound = 10 * lcm_checked(a.modulus(), b.modulus()).unwrap() + 40;
            for n in 1..=bound {
                prop_assert_eq!(i.contains(n), a.contains(n) && b.contains(n));
                prop_assert_eq!(u.contains(n), a.contains(n) || b.contains(n));
                prop_assert_eq!(d.contains(n), a.contains(n) && !b.contains(n));
                prop_assert_eq!(c.contains(n), !a.contains(n));
            }
        }

        #[test]
        fn equal_sets_have_equal_encodings(a in arb_set(), factor in 1u64..5) {
            // Re-encode the same set over a multiple of its modulus with
            // redundant exceptions; canonical forms must coincide.
            let m = a.modulus() * factor;
            let residues: Vec<u64> = (0..m).filter(|&r| a.residues().contains(&(r % a.modulus()))).collect();
            let mut added: Vec<u64> = a.added().iter().copied().collect();
            let first_member = a.members().next();
            if let Some(x) = first_member { added.push(x); }
            added.sort_unstable();
            added.dedup();
            let added: Vec<u64> = added.into_iter().filter(|n| !a.removed().contains(n)).collect();
            let b = EventuallyPeriodicSet::new(residues, m, added, a.removed().iter().copied()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn dyadic_cells_partition(a in arb_set().prop_filter("infinite", |s| s.is_infinite()), big_m in 0u32..4) {
            let count = 1usize << (big_m + 2);
            let members = a.enumerate(count).unwrap();
            let bound = *members.last().unwrap();
            let cells: Vec<_> = (0..=big_m).map(|m| a.dyadic_cell(m).unwrap()).collect();
            for &n in &members {
                let hits = cells.iter().filter(|c| c.contains(n)).count();
                // indices with valuation > big_m are the only ones left uncovered
                prop_assert!(hits <= 1);
            }
            let covered = members.iter().filter(|&&n| cells.iter().any(|c| c.contains(n))).count();
            let expected = (1..=count).filter(|i| i.trailing_zeros() <= big_m).count();
            prop_assert_eq!(covered, expected);
            for c in &cells {
                prop_assert!(c.members_up_to(bound).iter().all(|&n| a.contains(n)));
            }
        }
    }
}
