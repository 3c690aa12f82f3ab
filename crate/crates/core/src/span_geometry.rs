//! Geometry of the interaction set `𝓟_{x,y} ⊂ ℚ²` of two step sequences and
//! the two-dimensional witness constructions built on it.
//!
//! For `z = λx + μy`, `L_z = {λξ_i + μη_j : S_i ∩ T_j infinite}`, so `|L_z|`
//! is the number of distinct values of the linear form `(a, b) ↦ λa + μb`
//! on `𝓟`. Two points collide exactly when the direction `(λ, μ)` is
//! orthogonal to the segment joining them, which makes the attainable
//! cardinalities a finite computation over segment slopes.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::index_sets::EventuallyPeriodicSet;
use crate::rational::{self, int, ratio, Rational};
use crate::step_seq::{combination_cardinality, linear_combine, StepSeqError, StepSequence};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpanError {
    #[error(transparent)]
    StepSeq(#[from] StepSeqError),
    #[error("direction (0, 0) does not define a combination")]
    ZeroDirection,
    #[error("|𝓔| = 1: every combination has a single accumulation point")]
    NoSubmax,
    #[error("x and y are linearly dependent")]
    LinearlyDependent,
    #[error("|𝓔| = {e_count} differs from |L_y| = {n2}")]
    NotDominant { e_count: usize, n2: usize },
    #[error("need |L_x| < |L_y|, got {n1} and {n2}")]
    BadOrder { n1: usize, n2: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("epsilon {eps} exceeds the admissible bound {bound}")]
    EpsilonTooLarge { eps: String, bound: String },
    #[error("epsilon must be nonnegative")]
    NegativeEpsilon,
    #[error("x has an accumulation point outside the ±1 plateaus")]
    NotInPlateaus,
    #[error("|L_z0| = {card} does not exceed n = {n}")]
    NoOverflow { card: usize, n: usize },
    #[error("expected {expected} family members and coefficients, got {members} and {coefs}")]
    FamilySize { expected: usize, members: usize, coefs: usize },
    #[error("family member {index} has {card} accumulation points, more than n = {n}")]
    MemberTooLarge { index: usize, card: usize, n: usize },
    #[error("cardinality list must be nonempty with positive entries")]
    BadCardinalities,
}

/// `𝓔_{x,y}` and `𝓟_{x,y}` with the column data used by the witnesses.
///
/// Indices are 0-based positions in the ascending lists of accumulation
/// values of `x` (columns) and `y` (rows).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanInteraction {
    #[serde(with = "rational::serde_str_vec")]
    pub x_values: Vec<Rational>,
    #[serde(with = "rational::serde_str_vec")]
    pub y_values: Vec<Rational>,
    pub e_pairs: Vec<(usize, usize)>,
    /// `i_l`: smallest row meeting column `l`.
    pub column_min: BTreeMap<usize, usize>,
    /// `I_l`: largest row meeting column `l`.
    pub column_max: BTreeMap<usize, usize>,
    /// Slopes `Δη/Δξ` of all non-vertical segments of `𝓟`.
    #[serde(serialize_with = "ser_rational_set")]
    pub slope_candidates: BTreeSet<Rational>,
    pub has_vertical_segment: bool,
}

fn ser_rational_set<S: serde::Serializer>(set: &BTreeSet<Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(set.iter().map(rational::format))
}

impl SpanInteraction {
    pub fn e_count(&self) -> usize {
        self.e_pairs.len()
    }

    pub fn points(&self) -> Vec<(Rational, Rational)> {
        self.e_pairs
            .iter()
            .map(|&(i, j)| (self.x_values[i].clone(), self.y_values[j].clone()))
            .collect()
    }

    /// `μ` values for which the direction `(1, μ)` merges two points.
    fn forbidden_mu(&self) -> BTreeSet<Rational> {
        let pts = self.points();
        let mut out = BTreeSet::new();
        for (a, p) in pts.iter().enumerate() {
            for q in &pts[a + 1..] {
                let dy = &q.1 - &p.1;
                if !dy.is_zero() {
                    out.insert(-(&q.0 - &p.0) / dy);
                }
            }
        }
        out
    }

    /// A direction `(1, μ)` separating every pair of points: the midpoint of
    /// the first gap between forbidden `μ` values, `f + 1` past a single
    /// forbidden value, or `μ = 1` when nothing is forbidden.
    pub fn generic_direction(&self) -> (Rational, Rational) {
        let forbidden: Vec<Rational> = self.forbidden_mu().into_iter().collect();
        let mu = match forbidden.as_slice() {
            [] => int(1),
            [f] => f + int(1),
            [f, g, ..] => (f + g) / int(2),
        };
        (int(1), mu)
    }

    /// One representative per direction class: `(1, 0)`, `(−s, 1)` for every
    /// segment slope `s`, and the generic direction.
    pub fn direction_classes(&self) -> Vec<(Rational, Rational)> {
        let mut dirs = vec![(int(1), int(0))];
        dirs.extend(self.slope_candidates.iter().map(|s| (-s.clone(), int(1))));
        dirs.push(self.generic_direction());
        dirs
    }
}

pub fn interaction(x: &StepSequence, y: &StepSequence) -> SpanInteraction {
    let xs: Vec<&EventuallyPeriodicSet> = x.infinite_parts().map(|p| &p.cell).collect();
    let ys: Vec<&EventuallyPeriodicSet> = y.infinite_parts().map(|p| &p.cell).collect();
    let mut e_pairs = Vec::new();
    for (i, s) in xs.iter().enumerate() {
        for (j, t) in ys.iter().enumerate() {
            if s.intersect(t).is_infinite() {
                e_pairs.push((i, j));
            }
        }
    }
    let mut column_min = BTreeMap::new();
    let mut column_max = BTreeMap::new();
    for &(i, j) in &e_pairs {
        column_min.entry(i).and_modify(|m: &mut usize| *m = (*m).min(j)).or_insert(j);
        column_max.entry(i).and_modify(|m: &mut usize| *m = (*m).max(j)).or_insert(j);
    }
    let x_values: Vec<Rational> = x.infinite_parts().map(|p| p.value.clone()).collect();
    let y_values: Vec<Rational> = y.infinite_parts().map(|p| p.value.clone()).collect();
    let mut slope_candidates = BTreeSet::new();
    let mut has_vertical_segment = false;
    for (a, &(i, j)) in e_pairs.iter().enumerate() {
        for &(k, l) in &e_pairs[a + 1..] {
            if i == k {
                has_vertical_segment = true;
            } else {
                slope_candidates.insert((&y_values[l] - &y_values[j]) / (&x_values[k] - &x_values[i]));
            }
        }
    }
    SpanInteraction {
        x_values,
        y_values,
        e_pairs,
        column_min,
        column_max,
        slope_candidates,
        has_vertical_segment,
    }
}

/// `|{λξ_i + μη_j : (i, j) ∈ 𝓔}|`.
pub fn combo_cardinality(si: &SpanInteraction, lambda: &Rational, mu: &Rational) -> Result<usize, SpanError> {
    if lambda.is_zero() && mu.is_zero() {
        return Err(SpanError::ZeroDirection);
    }
    let values: BTreeSet<Rational> = si
        .e_pairs
        .iter()
        .map(|&(i, j)| lambda * &si.x_values[i] + mu * &si.y_values[j])
        .collect();
    Ok(values.len())
}

/// Every cardinality `|L_{λx+μy}|` attained over nonzero directions.
pub fn spectrum(si: &SpanInteraction) -> BTreeSet<usize> {
    si.direction_classes()
        .iter()
        .map(|(l, m)| combo_cardinality(si, l, m).expect("nonzero direction"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    #[serde(rename = "lambda", with = "rational::serde_str")]
    pub lambda: Rational,
    #[serde(rename = "mu", with = "rational::serde_str")]
    pub mu: Rational,
    #[serde(rename = "card")]
    pub cardinality: usize,
    #[serde(rename = "interval")]
    pub target_interval: Option<(usize, usize)>,
    pub witness: StepSequence,
}

impl WitnessReport {
    fn build(
        lambda: Rational,
        mu: Rational,
        x: &StepSequence,
        y: &StepSequence,
        target_interval: Option<(usize, usize)>,
    ) -> Result<Self, SpanError> {
        let witness = linear_combine(&[(lambda.clone(), x), (mu.clone(), y)])?;
        Ok(Self {
            lambda,
            mu,
            cardinality: witness.accumulation_count(),
            target_interval,
            witness,
        })
    }
}

pub fn linearly_independent(x: &StepSequence, y: &StepSequence) -> bool {
    if x.is_zero() || y.is_zero() {
        return false;
    }
    let part = x.parts().iter().find(|p| !p.value.is_zero()).expect("x is nonzero");
    let n = part.cell.members().next().expect("canonical cells are nonempty");
    let c = y.value_at(n) / &part.value;
    let rest = linear_combine(&[(int(1), y), (-c, x)]).expect("two terms");
    !rest.is_zero()
}

/// `z₁` with `|L_{z₁}| = |𝓔|` (generic direction) and `z₂` with
/// `|L_{z₂}| < |𝓔|` (direction orthogonal to the first segment of `𝓟`).
pub fn witness_max_and_submax(x: &StepSequence, y: &StepSequence) -> Result<(WitnessReport, WitnessReport), SpanError> {
    if !linearly_independent(x, y) {
        return Err(SpanError::LinearlyDependent);
    }
    let si = interaction(x, y);
    if si.e_count() < 2 {
        return Err(SpanError::NoSubmax);
    }
    let (l1, m1) = si.generic_direction();
    let max = WitnessReport::build(l1, m1, x, y, None)?;
    let pts = si.points();
    let (p, q) = (&pts[0], &pts[1]);
    let sub = WitnessReport::build(&q.1 - &p.1, &p.0 - &q.0, x, y, Some((1, si.e_count())))?;
    Ok((max, sub))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapWitness {
    #[serde(flatten)]
    pub report: WitnessReport,
    #[serde(rename = "C", with = "rational::serde_str")]
    pub c: Rational,
    /// `𝓒`, indexed by column `l`.
    #[serde(with = "rational::serde_str_vec")]
    pub column_slopes: Vec<Rational>,
    /// `r`: how many columns attain the minimum slope.
    pub multiplicity: usize,
    pub n1: usize,
    pub n2: usize,
    pub e_count: usize,
}

/// `z = −Cx + y` with `C` the least slope between consecutive columns of
/// `𝓟`, for `|L_x| < |L_y| = |𝓔|`. The result has `|𝓔| − r` accumulation
/// points, strictly between `n₂ − n₁` and `n₂`.
pub fn gap_witness(x: &StepSequence, y: &StepSequence) -> Result<GapWitness, SpanError> {
    let n1 = x.accumulation_count();
    let n2 = y.accumulation_count();
    if n1 >= n2 {
        return Err(SpanError::BadOrder { n1, n2 });
    }
    let si = interaction(x, y);
    if si.e_count() != n2 {
        return Err(SpanError::NotDominant {
            e_count: si.e_count(),
            n2,
        });
    }
    if n1 < 2 {
        return Err(SpanError::Degenerate("x must have at least two accumulation points"));
    }
    let (a, b) = (&si.x_values, &si.y_values);
    let column_slopes: Vec<Rational> = (0..n1 - 1)
        .map(|l| {
            let lo_next = si.column_min[&(l + 1)];
            let hi = si.column_max[&l];
            (&b[lo_next] - &b[hi]) / (&a[l + 1] - &a[l])
        })
        .collect();
    let c = column_slopes.iter().min().expect("n1 ≥ 2").clone();
    let multiplicity = column_slopes.iter().filter(|&s| *s == c).count();
    let report = WitnessReport::build(-c.clone(), int(1), x, y, Some((n2 - n1, n2)))?;
    Ok(GapWitness {
        report,
        c,
        column_slopes,
        multiplicity,
        n1,
        n2,
        e_count: si.e_count(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecrementWitness {
    #[serde(flatten)]
    pub report: WitnessReport,
    /// The two-plateau sequence `x` the witness is built from.
    pub x: StepSequence,
    #[serde(rename = "C", with = "rational::serde_str")]
    pub c: Rational,
    /// Whether `y` was replaced by `−y` because the maximal slope was 0.
    pub flipped: bool,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub e_count: usize,
}

/// `min{δ/(8‖y‖), 1/2}` with `δ` the least gap between accumulation values of `y`.
pub fn epsilon_bound(y: &StepSequence) -> Result<Rational, SpanError> {
    let (values, _) = y.accumulation_set();
    let delta = rational::min_positive_gap(&values).ok_or(SpanError::Degenerate("y is constant"))?;
    Ok((delta / (int(8) * y.sup_norm())).min(ratio(1, 2)))
}

fn smallest_prime_not_dividing(m: u64, at_least: u64) -> u64 {
    (at_least.max(2)..)
        .find(|&p| (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0) && !m.is_multiple_of(p))
        .expect("primes are unbounded")
}

/// A sequence with values in `[−1−ε, −1+ε] ∪ [1−ε, 1+ε]` whose every cell
/// meets every infinite cell of `y` infinitely often.
///
/// The sign pattern is `+1` on evens and `−1` on odds when each infinite
/// cell of `y` meets both parities; otherwise `+1` on `{n ≡ 0 mod q}` for
/// the least prime `q ≥ 3` coprime to the period of `y`. For `ε > 0` each
/// plateau splits into the two values `±1 ± ε/2` along a further coprime
/// prime modulus.
pub fn plateau_sequence(y: &StepSequence, eps: &Rational) -> StepSequence {
    let period = y.period();
    let evens = EventuallyPeriodicSet::residue_class(0, 2);
    let odds = EventuallyPeriodicSet::residue_class(1, 2);
    let parity_ok = y
        .infinite_parts()
        .all(|p| p.cell.intersect(&evens).is_infinite() && p.cell.intersect(&odds).is_infinite());
    let sign_mod = if parity_ok { 2 } else { smallest_prime_not_dividing(period, 3) };
    let half = eps / int(2);
    let (sub_mod, values) = if eps.is_zero() {
        (1, vec![])
    } else {
        let q = smallest_prime_not_dividing(period * sign_mod, 3);
        (q, vec![half.clone()])
    };
    let modulus = sign_mod * sub_mod;
    let table: Vec<Rational> = (0..modulus)
        .map(|r| {
            let sign = if r % sign_mod == 0 { int(1) } else { int(-1) };
            if values.is_empty() {
                sign
            } else if r % sub_mod == 0 {
                sign - &half
            } else {
                sign + &half
            }
        })
        .collect();
    StepSequence::from_residue_values(&table)
}

/// `z = −Cx ± y` with `|L_z| = |𝓔_{x,y}| − 1`, for a nonconstant `y` and a
/// constructed two-plateau `x`. Requires `0 ≤ ε ≤ min{δ/(8‖y‖), 1/2}`.
pub fn decrement_witness(y: &StepSequence, eps: &Rational) -> Result<DecrementWitness, SpanError> {
    if y.is_constant() {
        return Err(SpanError::Degenerate("y is constant"));
    }
    if eps.is_negative() {
        return Err(SpanError::NegativeEpsilon);
    }
    let bound = epsilon_bound(y)?;
    if eps > &bound {
        return Err(SpanError::EpsilonTooLarge {
            eps: rational::format(eps),
            bound: rational::format(&bound),
        });
    }
    let x = plateau_sequence(y, eps);
    decrement_with_plateaus(&x, y, eps)
}

/// Largest slope `(a_k − a_i)/(c_j − b_l)` from a point over the `−1`
/// plateau to a point over the `+1` plateau.
fn max_cross_slope(si: &SpanInteraction) -> Option<Rational> {
    let pts = si.points();
    let (minus, plus): (Vec<_>, Vec<_>) = pts.iter().partition(|p| p.0.is_negative());
    minus
        .iter()
        .flat_map(|(b, ai)| plus.iter().map(move |(c, ak)| (ak - ai) / (c - b)))
        .max()
}

/// The decrement construction for a caller-supplied two-plateau `x`.
pub fn decrement_with_plateaus(x: &StepSequence, y: &StepSequence, eps: &Rational) -> Result<DecrementWitness, SpanError> {
    if eps.is_negative() {
        return Err(SpanError::NegativeEpsilon);
    }
    if eps >= &int(1) {
        return Err(SpanError::EpsilonTooLarge {
            eps: rational::format(eps),
            bound: "1".into(),
        });
    }
    let in_plateau = |v: &Rational| (v.abs() - int(1)).abs() <= *eps;
    if !x.infinite_parts().all(|p| in_plateau(&p.value)) {
        return Err(SpanError::NotInPlateaus);
    }
    let si = interaction(x, y);
    let mut c = max_cross_slope(&si).ok_or(SpanError::Degenerate("x must meet both plateaus"))?;
    let mut flipped = false;
    let mut target = y.clone();
    if c.is_zero() {
        target = y.negate();
        flipped = true;
        c = max_cross_slope(&interaction(x, &target)).expect("same plateaus");
        if c.is_zero() {
            return Err(SpanError::Degenerate("all points of 𝓟 are aligned"));
        }
    }
    let e_count = si.e_count();
    let witness = linear_combine(&[(-c.clone(), x), (int(1), &target)])?;
    let mu = if flipped { int(-1) } else { int(1) };
    let report = WitnessReport {
        lambda: -c.clone(),
        mu,
        cardinality: witness.accumulation_count(),
        target_interval: Some((e_count - 1, e_count - 1)),
        witness,
    };
    Ok(DecrementWitness {
        report,
        x: x.clone(),
        c,
        flipped,
        epsilon: eps.clone(),
        e_count,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EstimateBounds {
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    #[serde(serialize_with = "ser_biguint")]
    pub upper: BigUint,
}

fn ser_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    match u64::try_from(v) {
        Ok(small) => s.serialize_u64(small),
        Err(_) => s.serialize_str(&v.to_string()),
    }
}

/// `n_k/(n₁⋯n_{k−1}) ≤ |L_z| ≤ n₁⋯n_k` for `z = Σ a_i x_i` with `a_k ≠ 0`.
pub fn estimate_bounds(cards: &[u64]) -> Result<EstimateBounds, SpanError> {
    let (&last, init) = cards.split_last().ok_or(SpanError::BadCardinalities)?;
    if cards.contains(&0) {
        return Err(SpanError::BadCardinalities);
    }
    let head: BigUint = init.iter().map(|&n| BigUint::from(n)).product();
    let lower = Rational::new(BigUint::from(last).into(), head.clone().into());
    Ok(EstimateBounds {
        lower,
        upper: head * BigUint::from(last),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeelReport {
    /// Coefficients of the surviving prefix `x_1, …, x_{n−steps}`.
    #[serde(with = "rational::serde_str_vec")]
    pub coefficients: Vec<Rational>,
    pub steps: usize,
    #[serde(rename = "card")]
    pub cardinality: usize,
    #[serde(rename = "interval")]
    pub target_interval: (usize, usize),
    /// `|L_{z_{i+1}}| · |L_{x_last}|` at the stopping step.
    pub product_bound: u64,
    pub witness: StepSequence,
}

/// Drops trailing terms of `z₀ = Σ coefs·family` while the cardinality stays
/// above `n`; the last combination kept has `n+1 ≤ |L_z| ≤ n²`.
pub fn overflow_peel(family: &[StepSequence], coefs: &[Rational], n: usize) -> Result<PeelReport, SpanError> {
    if family.len() != n || coefs.len() != n || n == 0 {
        return Err(SpanError::FamilySize {
            expected: n,
            members: family.len(),
            coefs: coefs.len(),
        });
    }
    for (index, x) in family.iter().enumerate() {
        let card = x.accumulation_count();
        if card > n {
            return Err(SpanError::MemberTooLarge { index, card, n });
        }
    }
    let terms: Vec<(Rational, &StepSequence)> = coefs.iter().cloned().zip(family).collect();
    let z0 = combination_cardinality(&terms)?;
    if z0 <= n {
        return Err(SpanError::NoOverflow { card: z0, n });
    }
    let mut len = n;
    let product_bound = loop {
        // len ≥ 2 here: a single term has at most n accumulation points.
        let shorter = combination_cardinality(&terms[..len - 1])?;
        if shorter <= n {
            break (shorter * family[len - 1].accumulation_count()) as u64;
        }
        len -= 1;
    };
    let witness = linear_combine(&terms[..len])?;
    Ok(PeelReport {
        coefficients: coefs[..len].to_vec(),
        steps: n - len,
        cardinality: witness.accumulation_count(),
        target_interval: (n + 1, n * n),
        product_bound,
        witness,
    })
}
