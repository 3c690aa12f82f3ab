//! Brute-force cross-checks: evaluate a long prefix numerically and read off
//! the values that keep recurring.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::omega::{omega_combination_limits, OmegaCombination};
use crate::rational::{self, Rational};
use crate::step_seq::StepSequence;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("invalid oracle config: {0}")]
    InvalidConfig(&'static str),
    #[error("oracle config inadequate: {0}")]
    InadequateConfig(String),
    #[error("perturbation amplitude must be nonnegative")]
    NegativeAmplitude,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleConfig {
    pub prefix_len: usize,
    /// Indices `n ≤ burn_in` are ignored.
    pub burn_in: u64,
    #[serde(with = "rational::serde_str")]
    pub tolerance: Rational,
    pub min_recurrence: usize,
}

impl OracleConfig {
    pub fn new(prefix_len: usize, burn_in: u64, tolerance: Rational, min_recurrence: usize) -> Result<Self, OracleError> {
        if burn_in >= prefix_len as u64 {
            return Err(OracleError::InvalidConfig("burn_in must be below prefix_len"));
        }
        if min_recurrence < 2 {
            return Err(OracleError::InvalidConfig("min_recurrence must be at least 2"));
        }
        if tolerance.is_negative() {
            return Err(OracleError::InvalidConfig("tolerance must be nonnegative"));
        }
        Ok(Self { prefix_len, burn_in, tolerance, min_recurrence })
    }

    /// Exact clustering with the default recurrence of 3.
    pub fn exact(prefix_len: usize, burn_in: u64) -> Result<Self, OracleError> {
        Self::new(prefix_len, burn_in, Rational::zero(), 3)
    }

    /// The smallest exact config adequate for `x`.
    pub fn for_step_sequence(x: &StepSequence) -> Self {
        let period = x.period() as usize;
        let burn_in = x.threshold().saturating_sub(1);
        Self::exact(burn_in as usize + 20 * period, burn_in).expect("valid by construction")
    }
}

/// Values recurring at least `min_recurrence` times after the burn-in.
///
/// `values[i]` is the term at index `n = i + 1`. At tolerance 0 clusters are
/// exact values; otherwise sorted values are chained while consecutive gaps
/// stay within the tolerance and each cluster is represented by its minimum.
pub fn cluster_accumulation(values: &[Rational], cfg: &OracleConfig) -> BTreeSet<Rational> {
    let tail = values.get(cfg.burn_in as usize..).unwrap_or(&[]);
    let mut counts: BTreeMap<&Rational, usize> = BTreeMap::new();
    for v in tail {
        *counts.entry(v).or_default() += 1;
    }
    if cfg.tolerance.is_zero() {
        return counts
            .into_iter()
            .filter(|&(_, c)| c >= cfg.min_recurrence)
            .map(|(v, _)| v.clone())
            .collect();
    }
    let mut out = BTreeSet::new();
    let mut cluster: Option<(&Rational, &Rational, usize)> = None;
    for (v, c) in counts {
        cluster = match cluster {
            Some((rep, last, total)) if v - last <= cfg.tolerance => Some((rep, v, total + c)),
            Some((rep, _, total)) => {
                if total >= cfg.min_recurrence {
                    out.insert(rep.clone());
                }
                Some((v, v, c))
            }
            None => Some((v, v, c)),
        };
    }
    if let Some((rep, _, total)) = cluster {
        if total >= cfg.min_recurrence {
            out.insert(rep.clone());
        }
    }
    out
}

/// Anything with a closed-form accumulation set and a numeric prefix.
pub trait Symbolic {
    fn prefix(&self, len: usize) -> Vec<Rational>;
    fn symbolic_limits(&self) -> BTreeSet<Rational>;
    fn check_adequate(&self, cfg: &OracleConfig) -> Result<(), OracleError>;
}

impl Symbolic for StepSequence {
    fn prefix(&self, len: usize) -> Vec<Rational> {
        self.eval_prefix(len)
    }

    fn symbolic_limits(&self) -> BTreeSet<Rational> {
        self.accumulation_set().0.into_iter().collect()
    }

    fn check_adequate(&self, cfg: &OracleConfig) -> Result<(), OracleError> {
        let period = self.period() as usize;
        if cfg.prefix_len < 20 * period {
            return Err(OracleError::InadequateConfig(format!(
                "prefix {} shorter than 20 periods of {period}",
                cfg.prefix_len
            )));
        }
        if cfg.burn_in + 1 < self.threshold() {
            return Err(OracleError::InadequateConfig(format!(
                "burn-in {} does not cover exceptions below {}",
                cfg.burn_in,
                self.threshold()
            )));
        }
        if (cfg.prefix_len - cfg.burn_in as usize) < cfg.min_recurrence * period {
            return Err(OracleError::InadequateConfig("too few periods after burn-in".into()));
        }
        Ok(())
    }
}

/// A combination of omega vectors with every level above `truncation` zeroed.
pub struct TruncatedOmega<'a> {
    pub combination: &'a OmegaCombination,
    pub truncation: u32,
}

impl Symbolic for TruncatedOmega<'_> {
    fn prefix(&self, len: usize) -> Vec<Rational> {
        self.combination.eval_prefix(len, Some(self.truncation))
    }

    fn symbolic_limits(&self) -> BTreeSet<Rational> {
        omega_combination_limits(self.combination, self.truncation)
    }

    fn check_adequate(&self, cfg: &OracleConfig) -> Result<(), OracleError> {
        let burn = self.combination.burn_in();
        if cfg.burn_in < burn {
            return Err(OracleError::InadequateConfig(format!(
                "burn-in {} below last shared index {burn}",
                cfg.burn_in
            )));
        }
        for (k, term) in self.combination.terms.iter().enumerate() {
            for m in 0..=self.truncation {
                let seen = term
                    .vector
                    .base
                    .cell_members(m)
                    .take_while(|&n| n <= cfg.prefix_len as u64)
                    .filter(|&n| n > cfg.burn_in)
                    .take(cfg.min_recurrence)
                    .count();
                if seen < cfg.min_recurrence {
                    return Err(OracleError::InadequateConfig(format!(
                        "term {k} level {m} has {seen} members in the window"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleCheck {
    #[serde(with = "rational::serde_str_vec")]
    pub oracle: Vec<Rational>,
    #[serde(with = "rational::serde_str_vec")]
    pub symbolic: Vec<Rational>,
    pub agrees: bool,
}

pub fn oracle_check<S: Symbolic + ?Sized>(x: &S, cfg: &OracleConfig) -> Result<OracleCheck, OracleError> {
    x.check_adequate(cfg)?;
    let oracle = cluster_accumulation(&x.prefix(cfg.prefix_len), cfg);
    let symbolic = x.symbolic_limits();
    let agrees = oracle == symbolic;
    Ok(OracleCheck {
        oracle: oracle.into_iter().collect(),
        symbolic: symbolic.into_iter().collect(),
        agrees,
    })
}

pub fn check_against_symbolic<S: Symbolic + ?Sized>(x: &S, cfg: &OracleConfig) -> Result<bool, OracleError> {
    Ok(oracle_check(x, cfg)?.agrees)
}

/// Oracle clusters of the untruncated combination all lie in
/// `{a_k r^m} ∪ {0}`.
pub fn omega_clusters_in_predicate(c: &OmegaCombination, cfg: &OracleConfig) -> bool {
    let clusters = cluster_accumulation(&c.eval_prefix(cfg.prefix_len, None), cfg);
    clusters.iter().all(|q| c.is_limit_value(q))
}

/// `n ↦ x_n + amplitude / n`, a `c₀` perturbation of `x`.
pub struct Perturbed<'a> {
    pub base: &'a StepSequence,
    pub amplitude: Rational,
}

pub fn perturb_c0(x: &StepSequence, amplitude: Rational) -> Result<Perturbed<'_>, OracleError> {
    if amplitude.is_negative() {
        return Err(OracleError::NegativeAmplitude);
    }
    Ok(Perturbed { base: x, amplitude })
}

impl Perturbed<'_> {
    pub fn prefix(&self, len: usize) -> Vec<Rational> {
        self.base
            .eval_prefix(len)
            .into_iter()
            .enumerate()
            .map(|(i, v)| v + &self.amplitude / Rational::from_integer((i as u64 + 1).into()))
            .collect()
    }
}
