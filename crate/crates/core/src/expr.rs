//! Text forms for index sets, prescribed sets and `n_k` rules.
//!
//! Index sets: `N`, `2N`, `3N+1`, `N+1`, `2N-1`, `{2,7}`, `res(0,2;5)`,
//! joined with `|` and optionally followed by `\{…}` to drop members, as in
//! `N\{1}` or `{2,7}|3N`. `ℕ`, `∪` and `∅` are accepted as well.
//!
//! Prescribed sets additionally accept `finite{2,3}`, `poly(1,0,0)@2`,
//! `exp(3)@1`, `exp(2,3)@1` and `gaps(k^2; K={2,7})`.
//!
//! Rules: polynomials in `k` such as `k^2`, `2k+3`, `1/2*k^2+1/2*k`, or
//! exponentials `2^k`, `3*2^k`; also `poly(…)` and `exp(b)` / `exp(c,b)`.

use std::collections::BTreeSet;

use crate::index_sets::{EventuallyPeriodicSet, IndexSetError};
use crate::rational::{self, Rational};
use crate::rules::{IntSequence, RuleError};
use crate::set_gates::{gap_complement_build, GateError, PrescribedSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("cannot parse `{0}`")]
    Syntax(String),
    #[error(transparent)]
    IndexSet(#[from] IndexSetError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

fn syntax(s: &str) -> ExprError {
    ExprError::Syntax(s.to_string())
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'ℕ' => 'N',
            '∪' => '|',
            '−' => '-',
            c => c,
        })
        .collect::<String>()
        .replace('∅', "{}")
}

fn parse_u64_list(s: &str, whole: &str) -> Result<Vec<u64>, ExprError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| t.parse::<u64>().map_err(|_| syntax(whole))).collect()
}

/// Splits at top-level occurrences of `sep` (outside parentheses and braces).
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

pub fn parse_index_set(s: &str) -> Result<EventuallyPeriodicSet, ExprError> {
    let t = normalize(s);
    let (body, removed) = match t.rsplit_once("\\{") {
        Some((body, rest)) => {
            let list = rest.strip_suffix('}').ok_or_else(|| syntax(s))?;
            (body.to_string(), parse_u64_list(list, s)?)
        }
        None => (t.clone(), Vec::new()),
    };
    if body.is_empty() {
        return Err(syntax(s));
    }
    let mut acc = EventuallyPeriodicSet::empty();
    for term in split_top(&body, '|') {
        acc = acc.union(&parse_term(term, s)?);
    }
    if !removed.is_empty() {
        acc = acc.difference(&EventuallyPeriodicSet::finite(removed)?);
    }
    Ok(acc)
}

fn parse_term(t: &str, whole: &str) -> Result<EventuallyPeriodicSet, ExprError> {
    if let Some(list) = t.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
        return Ok(EventuallyPeriodicSet::finite(parse_u64_list(list, whole)?)?);
    }
    if let Some(inner) = t.strip_prefix("res(").and_then(|r| r.strip_suffix(')')) {
        let (res, m) = inner.split_once(';').ok_or_else(|| syntax(whole))?;
        let m: u64 = m.parse().map_err(|_| syntax(whole))?;
        let residues = parse_u64_list(res, whole)?;
        return Ok(EventuallyPeriodicSet::new(residues, m, [], [])?);
    }
    // aN + b = {a·n + b : n ≥ 1}
    let npos = t.find('N').ok_or_else(|| syntax(whole))?;
    let a: u64 = match &t[..npos] {
        "" => 1,
        coef => coef.parse().map_err(|_| syntax(whole))?,
    };
    let b: i64 = match &t[npos + 1..] {
        "" => 0,
        off if off.starts_with('+') || off.starts_with('-') => off.parse().map_err(|_| syntax(whole))?,
        _ => return Err(syntax(whole)),
    };
    if a == 0 {
        return Err(syntax(whole));
    }
    let first = a as i64 + b;
    if first < 1 {
        return Err(IndexSetError::NotNatural.into());
    }
    let first = first as u64;
    let residue = first % a;
    let below: Vec<u64> = (1..first).filter(|n| n % a == residue).collect();
    Ok(EventuallyPeriodicSet::new(vec![residue], a, [], below)?)
}

pub fn parse_rule(s: &str) -> Result<IntSequence, ExprError> {
    let t = normalize(s);
    if let Some(inner) = t.strip_prefix("poly(").and_then(|r| r.strip_suffix(')')) {
        return Ok(IntSequence::poly(parse_rational_list(inner, s)?)?);
    }
    if let Some(inner) = t.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
        let (c, b) = parse_exp_args(inner, s)?;
        return Ok(IntSequence::exp(c, b)?);
    }
    // signed terms
    let mut terms: Vec<(bool, &str)> = Vec::new();
    let mut start = 0;
    let mut negative = false;
    for (i, c) in t.char_indices() {
        if (c == '+' || c == '-') && i > 0 && !t[..i].ends_with('^') {
            terms.push((negative, &t[start..i]));
            negative = c == '-';
            start = i + 1;
        } else if (c == '+' || c == '-') && i == 0 {
            negative = c == '-';
            start = 1;
        }
    }
    terms.push((negative, &t[start..]));

    let mut coeffs: Vec<Rational> = Vec::new();
    let mut exp_term = None;
    for (neg, term) in &terms {
        if term.is_empty() {
            return Err(syntax(s));
        }
        if let Some(base) = term.strip_suffix("^k") {
            let (c, b) = match base.split_once('*') {
                Some((c, b)) => (c, b),
                None => ("1", base),
            };
            let c: u64 = c.parse().map_err(|_| syntax(s))?;
            let b: u64 = b.parse().map_err(|_| syntax(s))?;
            if *neg || terms.len() > 1 || exp_term.is_some() {
                return Err(syntax(s));
            }
            exp_term = Some((c, b));
            continue;
        }
        let (coef, degree) = match term.find('k') {
            None => (rational::parse(term).map_err(|_| syntax(s))?, 0usize),
            Some(kpos) => {
                let c = term[..kpos].trim_end_matches('*');
                let c = if c.is_empty() { rational::one() } else { rational::parse(c).map_err(|_| syntax(s))? };
                let d = match &term[kpos + 1..] {
                    "" => 1,
                    rest => rest.strip_prefix('^').and_then(|d| d.parse().ok()).ok_or_else(|| syntax(s))?,
                };
                (c, d)
            }
        };
        if coeffs.len() <= degree {
            coeffs.resize(degree + 1, Rational::from_integer(0.into()));
        }
        coeffs[degree] += if *neg { -coef } else { coef };
    }
    if let Some((c, b)) = exp_term {
        return Ok(IntSequence::exp(c, b)?);
    }
    coeffs.reverse();
    Ok(IntSequence::poly(coeffs)?)
}

fn parse_rational_list(s: &str, whole: &str) -> Result<Vec<Rational>, ExprError> {
    s.split(',').map(|t| rational::parse(t).map_err(|_| syntax(whole))).collect()
}

fn parse_exp_args(inner: &str, whole: &str) -> Result<(u64, u64), ExprError> {
    let nums = parse_u64_list(inner, whole)?;
    match nums[..] {
        [b] => Ok((1, b)),
        [c, b] => Ok((c, b)),
        _ => Err(syntax(whole)),
    }
}

fn split_start<'a>(t: &'a str, whole: &str) -> Result<(&'a str, u64), ExprError> {
    match t.rsplit_once('@') {
        Some((body, n0)) => Ok((body, n0.parse().map_err(|_| syntax(whole))?)),
        None => Ok((t, 1)),
    }
}

pub fn parse_set_expr(s: &str) -> Result<PrescribedSet, ExprError> {
    let t = normalize(s);
    if let Some(list) = t.strip_prefix("finite{").and_then(|r| r.strip_suffix('}')) {
        let members: BTreeSet<u64> = parse_u64_list(list, s)?.into_iter().collect();
        return Ok(PrescribedSet::explicit_finite(members)?);
    }
    if t.starts_with("poly(") {
        let (body, n0) = split_start(&t, s)?;
        let inner = body.strip_prefix("poly(").and_then(|r| r.strip_suffix(')')).ok_or_else(|| syntax(s))?;
        return Ok(PrescribedSet::polynomial_image(parse_rational_list(inner, s)?, n0)?);
    }
    if t.starts_with("exp(") {
        let (body, n0) = split_start(&t, s)?;
        let inner = body.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')).ok_or_else(|| syntax(s))?;
        let (c, b) = parse_exp_args(inner, s)?;
        return Ok(PrescribedSet::exponential_image(c, b, n0)?);
    }
    if let Some(inner) = t.strip_prefix("gaps(").and_then(|r| r.strip_suffix(')')) {
        let parts = split_top(inner, ';');
        let [rule, k] = parts[..] else { return Err(syntax(s)) };
        let k = k.strip_prefix("K=").ok_or_else(|| syntax(s))?;
        return Ok(gap_complement_build(parse_rule(rule)?, parse_index_set(k)?)?);
    }
    Ok(PrescribedSet::ap_union(parse_index_set(&t)?)?)
}

/// `"p/q"` list separated by commas, e.g. `1,-2,1/3`.
pub fn parse_coefficients(s: &str) -> Result<Vec<Rational>, ExprError> {
    parse_rational_list(&normalize(s), s)
}

pub fn parse_u64(s: &str) -> Result<u64, ExprError> {
    s.trim().parse().map_err(|_| syntax(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn members(s: &str, bound: u64) -> Vec<u64> {
        parse_index_set(s).unwrap().members_up_to(bound)
    }

    #[test]
    fn index_set_forms() {
        assert_eq!(members("N", 4), vec![1, 2, 3, 4]);
        assert_eq!(members("2N", 8), vec![2, 4, 6, 8]);
        assert_eq!(members("2N+1", 9), vec![3, 5, 7, 9]);
        assert_eq!(members("2N-1", 7), vec![1, 3, 5, 7]);
        assert_eq!(members("N+1", 4), vec![2, 3, 4]);
        assert_eq!(members("N\\{1}", 4), vec![2, 3, 4]);
        assert_eq!(members("ℕ \\ {1}", 4), vec![2, 3, 4]);
        assert_eq!(members("{2,7}|3N", 10), vec![2, 3, 6, 7, 9]);
        assert_eq!(members("{2} ∪ res(0,1;5)", 11), vec![1, 2, 5, 6, 10, 11]);
        assert!(parse_index_set("{}").unwrap().is_empty());
        assert!(parse_index_set("0N").is_err());
        assert!(parse_index_set("2N-3").is_err());
        assert!(parse_index_set("M").is_err());
    }

    #[test]
    fn rule_forms() {
        let sq = parse_rule("k^2").unwrap();
        assert_eq!(sq.value_u64(3), 9);
        assert_eq!(parse_rule("poly(1,0,0)").unwrap(), sq);
        assert_eq!(parse_rule("2k+3").unwrap().value_u64(4), 11);
        assert_eq!(parse_rule("1/2*k^2+1/2*k").unwrap().value_u64(4), 10);
        assert_eq!(parse_rule("k^3-k+1").unwrap().value_u64(2), 7);
        assert_eq!(parse_rule("2^k").unwrap(), IntSequence::exp(1, 2).unwrap());
        assert_eq!(parse_rule("3*2^k").unwrap().value_u64(2), 12);
        assert_eq!(parse_rule("exp(3,2)").unwrap().value_u64(2), 12);
        assert!(parse_rule("5").is_err());
        assert!(parse_rule("2^k+1").is_err());
        assert!(parse_rule("k^").is_err());
        assert!(parse_rule("-k").is_err());
    }

    #[test]
    fn prescribed_set_forms() {
        let odd = parse_set_expr("2N+1").unwrap();
        assert!(odd.contains(3) && !odd.contains(1) && !odd.contains(4));
        let sq = parse_set_expr("poly(1,0,0)@2").unwrap();
        assert!(sq.contains(4) && sq.contains(49) && !sq.contains(1) && !sq.contains(50));
        let three = parse_set_expr("exp(3)@1").unwrap();
        assert!(three.contains(3) && three.contains(81) && !three.contains(1));
        let g = parse_set_expr("gaps(k^2; K={2,7})").unwrap();
        assert!(!g.contains(5) && g.contains(10) && !g.contains(50));
        let f = parse_set_expr("finite{2,3,5}").unwrap();
        assert_eq!(f.members_up_to(10), vec![2, 3, 5]);
        assert!(matches!(parse_set_expr("N"), Err(ExprError::Gate(GateError::ContainsOne))));
        assert!(parse_set_expr("poly(1,0,0)@1").is_err());
        assert!(parse_set_expr("gaps(3; K={})").is_err());
    }

    #[test]
    fn coefficient_lists() {
        assert_eq!(parse_coefficients("1, -2, 1/3").unwrap(), vec![int(1), int(-2), crate::rational::ratio(1, 3)]);
        assert!(parse_coefficients("1,x").is_err());
        assert_eq!(parse_u64("12").unwrap(), 12);
        assert!(parse_u64("-1").is_err());
    }
}
