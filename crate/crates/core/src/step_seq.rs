//! Step sequences `x = ξ₁·1_{S₁} + … + ξ_n·1_{S_n}` over a partition of ℕ
//! into eventually periodic cells, and their exact linear combinations.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::index_sets::{lcm_checked, EventuallyPeriodicSet, MAX_MODULUS};
use crate::rational::{self, Rational, ScaledI128};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepSeqError {
    #[error("cells overlap at n = {0}")]
    Overlap(u64),
    #[error("cells do not cover n = {0}")]
    NotCovering(u64),
    #[error("a step sequence needs at least one part")]
    NoParts,
    #[error("linear combination needs at least one term")]
    NoTerms,
    #[error("combined modulus exceeds {MAX_MODULUS}")]
    ModulusTooLarge,
}

/// `|L_x|` for a bounded sequence: a positive integer, ω, or 𝔠.
///
/// `Finite(0)` is also used for finite cardinalities of index sets
/// (e.g. an empty shift intersection).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CardinalityClass {
    Finite(u64),
    CountablyInfinite,
    Continuum,
}

impl CardinalityClass {
    pub fn is_infinite(self) -> bool {
        !matches!(self, CardinalityClass::Finite(_))
    }
}

impl fmt::Display for CardinalityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CardinalityClass::Finite(n) => write!(f, "{n}"),
            CardinalityClass::CountablyInfinite => write!(f, "omega"),
            CardinalityClass::Continuum => write!(f, "continuum"),
        }
    }
}

impl Serialize for CardinalityClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CardinalityClass::Finite(n) => s.serialize_u64(*n),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Part {
    #[serde(rename = "val", with = "rational::serde_str")]
    pub value: Rational,
    pub cell: EventuallyPeriodicSet,
}

/// A canonical step sequence: non-empty, pairwise disjoint cells covering ℕ,
/// one part per distinct value, sorted by value ascending.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StepSeqJson", into = "StepSeqJson")]
pub struct StepSequence {
    parts: Vec<Part>,
}

#[derive(Serialize, Deserialize)]
struct StepSeqJson {
    parts: Vec<Part>,
}

impl TryFrom<StepSeqJson> for StepSequence {
    type Error = StepSeqError;

    fn try_from(j: StepSeqJson) -> Result<Self, Self::Error> {
        StepSequence::new(j.parts.into_iter().map(|p| (p.value, p.cell)))
    }
}

impl From<StepSequence> for StepSeqJson {
    fn from(s: StepSequence) -> Self {
        StepSeqJson { parts: s.parts }
    }
}

impl StepSequence {
    /// Validates that the cells partition ℕ and canonicalizes.
    pub fn new(parts: impl IntoIterator<Item = (Rational, EventuallyPeriodicSet)>) -> Result<Self, StepSeqError> {
        let parts: Vec<(Rational, EventuallyPeriodicSet)> =
            parts.into_iter().filter(|(_, c)| !c.is_empty()).collect();
        if parts.is_empty() {
            return Err(StepSeqError::NotCovering(1));
        }
        check_partition(parts.iter().map(|(_, c)| c))?;
        let mut merged: Vec<(Rational, EventuallyPeriodicSet)> = Vec::new();
        for (v, c) in parts {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, cell)) => *cell = cell.union(&c),
                None => merged.push((v, c)),
            }
        }
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self {
            parts: merged.into_iter().map(|(value, cell)| Part { value, cell }).collect(),
        })
    }

    /// Parts already known to be disjoint, covering, non-empty and value-distinct.
    fn from_canonical_parts(mut parts: Vec<Part>) -> Self {
        parts.sort_by(|a, b| a.value.cmp(&b.value));
        Self { parts }
    }

    pub fn constant(value: Rational) -> Self {
        Self {
            parts: vec![Part {
                value,
                cell: EventuallyPeriodicSet::naturals(),
            }],
        }
    }

    /// The sequence taking `values[r]` on `{n : n ≡ r (mod values.len())}`.
    pub fn from_residue_values(values: &[Rational]) -> Self {
        assert!(!values.is_empty(), "need at least one residue value");
        let m = values.len() as u64;
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(r, v)| (v.clone(), EventuallyPeriodicSet::residue_class(r as u64, m))),
        )
        .expect("residue classes partition ℕ")
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Parts on infinite cells, in ascending value order.
    pub fn infinite_parts(&self) -> impl Iterator<Item = &Part> {
        self.parts.iter().filter(|p| p.cell.is_infinite())
    }

    pub fn value_at(&self, n: u64) -> &Rational {
        &self
            .parts
            .iter()
            .find(|p| p.cell.contains(n))
            .unwrap_or_else(|| panic!("n = {n} is not covered"))
            .value
    }

    /// `[x_1, …, x_count]`.
    pub fn eval_prefix(&self, count: usize) -> Vec<Rational> {
        let eval = Evaluator::new(self);
        (1..=count as u64).map(|n| self.parts[eval.part_index(n)].value.clone()).collect()
    }

    /// `L_x`: values carried by infinite cells, ascending, with its cardinality.
    pub fn accumulation_set(&self) -> (Vec<Rational>, CardinalityClass) {
        let values: Vec<Rational> = self.infinite_parts().map(|p| p.value.clone()).collect();
        let card = CardinalityClass::Finite(values.len() as u64);
        (values, card)
    }

    pub fn accumulation_count(&self) -> usize {
        self.infinite_parts().count()
    }

    pub fn sup_norm(&self) -> Rational {
        self.parts
            .iter()
            .map(|p| p.value.abs())
            .max()
            .expect("canonical sequences have parts")
    }

    pub fn is_zero(&self) -> bool {
        self.parts.len() == 1 && self.parts[0].value.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.accumulation_count() == 1
    }

    /// lcm of the cell moduli.
    pub fn period(&self) -> u64 {
        self.parts
            .iter()
            .try_fold(1u64, |acc, p| lcm_checked(acc, p.cell.modulus()))
            .expect("period fits in u64")
    }

    /// One past the largest exception of any cell.
    pub fn threshold(&self) -> u64 {
        self.parts.iter().map(|p| p.cell.threshold()).max().unwrap_or(1)
    }

    pub fn scale(&self, coef: &Rational) -> Self {
        linear_combine(&[(coef.clone(), self)]).expect("one term")
    }

    pub fn negate(&self) -> Self {
        self.scale(&rational::int(-1))
    }
}

impl fmt::Debug for StepSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StepSequence[{self}]")
    }
}

impl fmt::Display for StepSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| format!("{} on {}", p.value, p.cell)).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn check_partition<'a>(cells: impl Iterator<Item = &'a EventuallyPeriodicSet> + Clone) -> Result<(), StepSeqError> {
    let mut modulus = 1u64;
    let mut start = 1u64;
    for c in cells.clone() {
        modulus = lcm_checked(modulus, c.modulus())
            .filter(|&m| m <= MAX_MODULUS)
            .ok_or(StepSeqError::ModulusTooLarge)?;
        start = start.max(c.threshold());
    }
    for n in 1..start {
        match cells.clone().filter(|c| c.contains(n)).count() {
            0 => return Err(StepSeqError::NotCovering(n)),
            1 => {}
            _ => return Err(StepSeqError::Overlap(n)),
        }
    }
    // Periodic regime: count pattern hits per residue mod the common period.
    let mut hits = vec![0u8; modulus as usize];
    for c in cells {
        let m = c.modulus();
        for &r in c.residues() {
            let mut x = r;
            while x < modulus {
                hits[x as usize] = hits[x as usize].saturating_add(1);
                x += m;
            }
        }
    }
    // Report a concrete n ≥ start for the first bad residue.
    let witness = |r: usize| {
        let r = r as u64;
        let base = start - start % modulus;
        if base + r >= start {
            base + r
        } else {
            base + modulus + r
        }
    };
    if let Some(r) = hits.iter().position(|&h| h == 0) {
        return Err(StepSeqError::NotCovering(witness(r)));
    }
    if let Some(r) = hits.iter().position(|&h| h > 1) {
        return Err(StepSeqError::Overlap(witness(r)));
    }
    Ok(())
}

/// Residue table for fast evaluation of a canonical step sequence.
pub(crate) struct Evaluator {
    modulus: u64,
    start: u64,
    table: Vec<u32>,
    early: Vec<u32>,
}

impl Evaluator {
    pub fn new(x: &StepSequence) -> Self {
        let modulus = x.period();
        let start = x.threshold();
        assert!(modulus <= MAX_MODULUS, "period {modulus} too large");
        let mut table = vec![u32::MAX; modulus as usize];
        for (i, p) in x.parts.iter().enumerate() {
            let m = p.cell.modulus();
            for &r in p.cell.residues() {
                let mut v = r;
                while v < modulus {
                    table[v as usize] = i as u32;
                    v += m;
                }
            }
        }
        let early = (1..start)
            .map(|n| x.parts.iter().position(|p| p.cell.contains(n)).expect("covering") as u32)
            .collect();
        Self {
            modulus,
            start,
            table,
            early,
        }
    }

    pub fn part_index(&self, n: u64) -> usize {
        if n < self.start {
            self.early[(n - 1) as usize] as usize
        } else {
            self.table[(n % self.modulus) as usize] as usize
        }
    }
}

/// The common refinement of several step sequences: for every residue of
/// the joint period, the tuple of part indices it falls into.
pub(crate) struct Refinement {
    evals: Vec<Evaluator>,
    pub modulus: u64,
    pub start: u64,
    /// tuple id per residue `0..modulus`
    pub residue_tuple: Vec<u32>,
    pub tuples: Vec<Vec<u32>>,
}

impl Refinement {
    pub fn new(seqs: Vec<&StepSequence>) -> Result<Self, StepSeqError> {
        let mut modulus = 1u64;
        let mut start = 1u64;
        for s in &seqs {
            modulus = lcm_checked(modulus, s.period())
                .filter(|&m| m <= MAX_MODULUS)
                .ok_or(StepSeqError::ModulusTooLarge)?;
            start = start.max(s.threshold());
        }
        let evals: Vec<Evaluator> = seqs.iter().map(|s| Evaluator::new(s)).collect();
        let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut tuples = Vec::new();
        let mut residue_tuple = Vec::with_capacity(modulus as usize);
        let mut key = vec![0u32; seqs.len()];
        for r in 0..modulus {
            for (k, e) in key.iter_mut().zip(&evals) {
                *k = e.table[(r % e.modulus) as usize];
            }
            let id = *ids.entry(key.clone()).or_insert_with(|| {
                tuples.push(key.clone());
                (tuples.len() - 1) as u32
            });
            residue_tuple.push(id);
        }
        Ok(Self {
            evals,
            modulus,
            start,
            residue_tuple,
            tuples,
        })
    }

    /// Part indices of every sequence at `n`.
    pub fn tuple_at(&self, n: u64) -> Vec<u32> {
        self.evals.iter().map(|e| e.part_index(n) as u32).collect()
    }
}

fn check_terms(terms: &[(Rational, &StepSequence)]) -> Result<(), StepSeqError> {
    if terms.is_empty() {
        Err(StepSeqError::NoTerms)
    } else {
        Ok(())
    }
}

fn tuple_value(terms: &[(Rational, &StepSequence)], tuple: &[u32]) -> Rational {
    terms
        .iter()
        .zip(tuple)
        .fold(Rational::zero(), |acc, ((c, s), &p)| acc + c * &s.parts[p as usize].value)
}

/// Residues, added and removed indices collected for one value.
type CellParts = (Vec<u64>, Vec<u64>, Vec<u64>);

/// Exact `Σ coef·seq`, canonicalized.
pub fn linear_combine(terms: &[(Rational, &StepSequence)]) -> Result<StepSequence, StepSeqError> {
    check_terms(terms)?;
    let refinement = Refinement::new(terms.iter().map(|(_, s)| *s).collect())?;
    let tuple_values: Vec<Rational> = refinement.tuples.iter().map(|t| tuple_value(terms, t)).collect();

    // value -> (pattern residues, explicit adds, explicit removes)
    let mut cells: HashMap<Rational, CellParts> = HashMap::new();
    for (r, &t) in refinement.residue_tuple.iter().enumerate() {
        cells.entry(tuple_values[t as usize].clone()).or_default().0.push(r as u64);
    }
    let modulus = refinement.modulus;
    for n in 1..refinement.start {
        let actual = tuple_value(terms, &refinement.tuple_at(n));
        let pattern = &tuple_values[refinement.residue_tuple[(n % modulus) as usize] as usize];
        if &actual != pattern {
            cells.get_mut(pattern).expect("pattern value present").2.push(n);
            cells.entry(actual).or_default().1.push(n);
        }
    }
    let parts = cells
        .into_iter()
        .map(|(value, (res, add, rem))| Part {
            value,
            cell: EventuallyPeriodicSet::new(res, modulus, add, rem).expect("refinement cell"),
        })
        .filter(|p| !p.cell.is_empty())
        .collect();
    Ok(StepSequence::from_canonical_parts(parts))
}

/// `L_z` for `z = Σ coef·seq`, without materializing the cells of `z`.
pub fn combination_accumulation(terms: &[(Rational, &StepSequence)]) -> Result<BTreeSet<Rational>, StepSeqError> {
    check_terms(terms)?;
    let refinement = Refinement::new(terms.iter().map(|(_, s)| *s).collect())?;
    Ok(refinement.tuples.iter().map(|t| tuple_value(terms, t)).collect())
}

/// `|L_z|` for `z = Σ coef·seq`. Uses common-denominator integer sums when
/// they fit, exact rationals otherwise.
pub fn combination_cardinality(terms: &[(Rational, &StepSequence)]) -> Result<usize, StepSeqError> {
    check_terms(terms)?;
    let refinement = Refinement::new(terms.iter().map(|(_, s)| *s).collect())?;
    let mut weights: Vec<Rational> = Vec::new();
    let mut offsets = Vec::with_capacity(terms.len());
    for (c, s) in terms {
        offsets.push(weights.len());
        weights.extend(s.parts.iter().map(|p| c * &p.value));
    }
    match ScaledI128::new(&weights, terms.len() as u32 + 1) {
        Some(scaled) => {
            let sums: std::collections::HashSet<i128> = refinement
                .tuples
                .iter()
                .map(|t| t.iter().zip(&offsets).map(|(&p, &o)| scaled.values[o + p as usize]).sum())
                .collect();
            Ok(sums.len())
        }
        None => Ok(refinement.tuples.iter().map(|t| tuple_value(terms, t)).collect::<BTreeSet<_>>().len()),
    }
}

/// `sup_n |x_n − y_n|`.
pub fn sup_distance(x: &StepSequence, y: &StepSequence) -> Rational {
    linear_combine(&[(rational::int(1), x), (rational::int(-1), y)])
        .expect("two terms")
        .sup_norm()
}
