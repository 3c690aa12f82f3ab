//! Sequences with a prescribed number of accumulation points, and the
//! inductive basis whose span avoids `⋃_{k ∈ 𝓚} [n_k, n_{k+1})`.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::index_sets::{gcd, EventuallyPeriodicSet};
use crate::rational::{self, Rational};
use crate::rules::{IntSequence, RuleError};
use crate::step_seq::{combination_cardinality, StepSeqError, StepSequence};

/// Largest cell modulus a basis vector may use.
pub const MAX_BASIS_MODULUS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructError {
    #[error("accumulation count must be at least 1")]
    ZeroCount,
    #[error("expected {expected} distinct values, got {got}")]
    BadValues { expected: usize, got: usize },
    #[error("invalid rule: {0}")]
    Rule(#[from] RuleError),
    #[error("basis length must be at least 1")]
    EmptyBasis,
    #[error("basis step {step} needs modulus {modulus}, above the limit {MAX_BASIS_MODULUS}")]
    SizeLimit { step: usize, modulus: String },
    #[error("coefficient vector has length {got}, basis has {expected}")]
    CoefficientLength { expected: usize, got: usize },
    #[error("coefficient vector is zero")]
    ZeroVector,
    #[error(transparent)]
    StepSeq(#[from] StepSeqError),
}

/// A sequence with exactly `l` accumulation points: `values[r]` on the
/// residue class `r mod l`, defaulting to `values = 0, 1, …, l − 1`.
pub fn make_step_with_card(l: usize, values: Option<&[Rational]>) -> Result<StepSequence, ConstructError> {
    if l == 0 {
        return Err(ConstructError::ZeroCount);
    }
    let vals: Vec<Rational> = match values {
        Some(v) => v.to_vec(),
        None => (0..l as i64).map(rational::int).collect(),
    };
    let distinct: std::collections::BTreeSet<&Rational> = vals.iter().collect();
    if vals.len() != l || distinct.len() != l {
        return Err(ConstructError::BadValues { expected: l, got: distinct.len() });
    }
    Ok(StepSequence::from_residue_values(&vals))
}

/// Values `0, 1, …, l − 1` spread over residues mod `modulus ≥ l`; the
/// residues at or above `l − 1` share the top value.
fn step_on_modulus(l: u64, modulus: u64) -> StepSequence {
    let vals: Vec<Rational> = (0..modulus).map(|r| rational::int(r.min(l - 1) as i64)).collect();
    StepSequence::from_residue_values(&vals)
}

#[derive(Debug, Clone, Serialize)]
pub struct NkBasisReport {
    pub rule: String,
    pub basis: Vec<StepSequence>,
    pub l_values: Vec<u64>,
    pub k_indices: Vec<u64>,
    pub moduli: Vec<u64>,
    pub certificates: Vec<String>,
}

impl NkBasisReport {
    /// `𝓚 = {k_1, …, k_r}` as a finite index set.
    pub fn removed_indices(&self) -> EventuallyPeriodicSet {
        EventuallyPeriodicSet::finite(self.k_indices.iter().copied()).expect("indices are positive")
    }

    /// `l_1 ⋯ l_j` (`j` counted from 1; `j = 0` gives 1).
    pub fn prefix_product(&self, j: usize) -> BigInt {
        self.l_values[..j].iter().map(|&l| BigInt::from(l)).product()
    }

    /// Window `[lo, hi)` certified for `|L_z|` when the top nonzero
    /// coefficient sits at 0-based index `top`.
    pub fn window(&self, rule: &IntSequence, top: usize) -> (BigInt, BigInt) {
        let lo = if top == 0 { BigInt::from(2) } else { rule.value(self.k_indices[top - 1] + 1) };
        (lo, rule.value(self.k_indices[top]))
    }
}

/// Greedy basis: `l_1 = 2`, `l_r = n_{k_{r−1}+1} · l_1⋯l_{r−1}`, and `k_r`
/// the least index with `n_{k_r} > l_1⋯l_r`. Each `x_r` lives on the least
/// modulus `≥ l_r` coprime to the earlier ones.
pub fn build_nk_basis(rule: &IntSequence, r: usize) -> Result<NkBasisReport, ConstructError> {
    rule.validate()?;
    if r == 0 {
        return Err(ConstructError::EmptyBasis);
    }
    let mut report = NkBasisReport {
        rule: rule.to_string(),
        basis: Vec::new(),
        l_values: Vec::new(),
        k_indices: Vec::new(),
        moduli: Vec::new(),
        certificates: Vec::new(),
    };
    let mut product = BigInt::from(1);
    for step in 0..r {
        let l = if step == 0 {
            BigInt::from(2)
        } else {
            rule.value(report.k_indices[step - 1] + 1) * &product
        };
        let too_big = |m: &BigInt| ConstructError::SizeLimit { step: step + 1, modulus: m.to_string() };
        let l_u = l.to_u64().filter(|&v| v <= MAX_BASIS_MODULUS).ok_or_else(|| too_big(&l))?;
        let mut modulus = l_u;
        while report.moduli.iter().any(|&m| gcd(m, modulus) != 1) {
            modulus += 1;
        }
        if modulus > MAX_BASIS_MODULUS {
            return Err(too_big(&BigInt::from(modulus)));
        }
        product *= &l;
        let k = rule.first_exceeding(&product);

        if step == 0 {
            report.certificates.push("l_1 = 2 >= 2".to_string());
        } else {
            let prev = report.k_indices[step - 1];
            report.certificates.push(format!(
                "l_{j}/(l_1...l_{p}) = {l}/{q} = {ratio} >= n_{{k_{p}+1}} = n_{k1} = {nk1}",
                j = step + 1,
                p = step,
                q = &product / &l,
                ratio = &l / (&product / &l),
                k1 = prev + 1,
                nk1 = rule.value(prev + 1),
            ));
        }
        report.certificates.push(format!(
            "n_{{k_{j}}} = n_{k} = {nk} > l_1...l_{j} = {product}",
            j = step + 1,
            nk = rule.value(k),
        ));
        report.basis.push(step_on_modulus(l_u, modulus));
        report.l_values.push(l_u);
        report.k_indices.push(k);
        report.moduli.push(modulus);
    }
    Ok(report)
}

/// Result of checking one combination against the certified window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MembershipCheck {
    pub card: usize,
    pub top: usize,
    pub window: (String, String),
    pub in_window: bool,
    pub avoids_removed: bool,
}

impl MembershipCheck {
    pub fn holds(&self) -> bool {
        self.in_window && self.avoids_removed
    }
}

/// `|L_z|` for `z = Σ coefs_i · basis_i`, checked against the sandwich window
/// of the top nonzero index and against every removed interval of `𝓚`.
pub fn check_nk_membership(
    report: &NkBasisReport,
    coefs: &[Rational],
    rule: &IntSequence,
    removed: &EventuallyPeriodicSet,
) -> Result<MembershipCheck, ConstructError> {
    if coefs.len() != report.basis.len() {
        return Err(ConstructError::CoefficientLength { expected: report.basis.len(), got: coefs.len() });
    }
    let top = coefs.iter().rposition(|c| !c.is_zero()).ok_or(ConstructError::ZeroVector)?;
    let terms: Vec<(Rational, &StepSequence)> = coefs
        .iter()
        .zip(&report.basis)
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, b)| (c.clone(), b))
        .collect();
    let card = combination_cardinality(&terms)?;
    let (lo, hi) = report.window(rule, top);
    let c = BigInt::from(card);
    let in_window = lo <= c && c < hi;
    let avoids_removed = card >= 2 && rule.bracket(card as u64).is_none_or(|k| !removed.contains(k));
    Ok(MembershipCheck {
        card,
        top,
        window: (lo.to_string(), hi.to_string()),
        in_window,
        avoids_removed,
    })
}

pub fn verify_nk_membership(
    report: &NkBasisReport,
    coefs: &[Rational],
    rule: &IntSequence,
    removed: &EventuallyPeriodicSet,
) -> Result<bool, ConstructError> {
    Ok(check_nk_membership(report, coefs, rule, removed)?.holds())
}

/// Decreasing any `l_r` or `k_r` by one breaks a certificate.
pub fn greedy_is_minimal(report: &NkBasisReport, rule: &IntSequence) -> bool {
    let mut product = BigInt::from(1);
    for (step, (&l, &k)) in report.l_values.iter().zip(&report.k_indices).enumerate() {
        let smaller_l = BigInt::from(l - 1);
        let l_tight = if step == 0 {
            smaller_l < BigInt::from(2)
        } else {
            smaller_l < rule.value(report.k_indices[step - 1] + 1) * &product
        };
        product *= BigInt::from(l);
        let k_tight = k == 1 || rule.value(k - 1) <= product;
        if !l_tight || !k_tight {
            return false;
        }
    }
    true
}
