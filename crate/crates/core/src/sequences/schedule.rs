use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rug::{Integer, Rational};

use super::{DensifiedPair, SequenceError};
use crate::precision::{format_rational, parse_rational, PrecisionPolicy, RationalPow};
use std::cmp::Ordering;

/// How an ε schedule was produced.
#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    /// `ε_n = 1 / (2 (q_(n+1) − q_n))`
    Default,
    Constant(Rational),
    /// `ε_n = c · n^(−k)`
    Poly {
        c: Rational,
        k: u32,
    },
    List(Vec<Rational>),
}

impl FromStr for ScheduleKind {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SequenceError::UnknownDescriptor(s.to_string());
        let mut parts = s.split(':');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("default"), None, None, None) => Ok(ScheduleKind::Default),
            (Some("const"), Some(c), None, None) => Ok(ScheduleKind::Constant(parse_rational(c).map_err(|_| bad())?)),
            (Some("poly"), Some(c), Some(k), None) => Ok(ScheduleKind::Poly {
                c: parse_rational(c).map_err(|_| bad())?,
                k: k.parse().map_err(|_| bad())?,
            }),
            (Some("list"), Some(vals), None, None) => vals
                .split(',')
                .map(parse_rational)
                .collect::<Result<Vec<_>, _>>()
                .map(ScheduleKind::List)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleKind::Default => write!(f, "default"),
            ScheduleKind::Constant(c) => write!(f, "const:{}", format_rational(c)),
            ScheduleKind::Poly { c, k } => write!(f, "poly:{}:{k}", format_rational(c)),
            ScheduleKind::List(v) => {
                let items: Vec<String> = v.iter().map(format_rational).collect();
                write!(f, "list:{}", items.join(","))
            }
        }
    }
}

/// Per-level radii `ε_n`, one for each `n` in `1..len` of the working
/// sequence (the last exponent has no successor and so no radius).
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonSchedule {
    eps: Vec<Rational>,
    kind: ScheduleKind,
}

impl EpsilonSchedule {
    /// Builds a schedule of the given kind for `dp`.
    pub fn build(kind: &ScheduleKind, dp: &DensifiedPair) -> Result<Self, SequenceError> {
        let needed = dp.len().saturating_sub(1);
        let eps: Vec<Rational> = match kind {
            ScheduleKind::Default => (1..=needed).map(|n| Rational::from((1, 2)) / dp.gap_at(n)).collect(),
            ScheduleKind::Constant(c) => vec![c.clone(); needed],
            ScheduleKind::Poly { c, k } => (1..=needed).map(|n| c / Rational::from(rug::ops::Pow::pow(Integer::from(n), *k))).collect(),
            ScheduleKind::List(v) => {
                if v.len() < needed {
                    return Err(SequenceError::ScheduleLength {
                        expected: needed,
                        got: v.len(),
                    });
                }
                v[..needed].to_vec()
            }
        };
        if let Some(i) = eps.iter().position(|e| *e <= 0) {
            return Err(SequenceError::NonPositiveSchedule { n: i + 1 });
        }
        Ok(EpsilonSchedule { eps, kind: kind.clone() })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn values(&self) -> &[Rational] {
        &self.eps
    }

    /// `ε_n` for one-based `n`.
    pub fn at(&self, n: usize) -> &Rational {
        &self.eps[n - 1]
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// `a_n = r_n − ε_n`, `b_n = r_n + ε_n`.
    pub fn window(&self, dp: &DensifiedPair, n: usize) -> (Rational, Rational) {
        let r = dp.r_at(n);
        let e = self.at(n);
        (Rational::from(r - e), Rational::from(r + e))
    }
}

/// `ε_n = 1 / (2 (q_(n+1) − q_n))`.
pub fn default_schedule(dp: &DensifiedPair) -> EpsilonSchedule {
    EpsilonSchedule::build(&ScheduleKind::Default, dp).expect("strictly increasing sequence gives positive radii")
}

/// Certified test of `2 ε λ^g >= ⌈λ^(η g)⌉ + 2`.
pub fn condition_holds(lambda: &Rational, eta: &Rational, gap: &Rational, eps: &Rational, max_doublings: u32) -> Result<bool, SequenceError> {
    let scaled = Rational::from(eta * gap);
    let policy = PrecisionPolicy::for_scale(&scaled, lambda, max_doublings);
    let branch = RationalPow::new(lambda, &scaled).ceil(&policy)?;
    let target = Rational::from(branch + 2) / Rational::from(2 * eps);
    let policy = PrecisionPolicy::for_scale(gap, lambda, max_doublings);
    Ok(RationalPow::new(lambda, gap).cmp(&target, &policy)? != Ordering::Less)
}

/// Outcome of checking the level condition along a schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleCheck {
    /// `holds[n-1]` for `n = 1..=len`.
    pub holds: Vec<bool>,
    /// Smallest `N` such that the condition holds at every `n >= N`.
    pub first_valid: usize,
}

/// Evaluates the level condition at every index of the schedule.
pub fn validate_schedule(
    dp: &DensifiedPair,
    schedule: &EpsilonSchedule,
    lambda: &Rational,
    eta: &Rational,
    max_doublings: u32,
) -> Result<ScheduleCheck, SequenceError> {
    if *lambda <= 1 {
        return Err(SequenceError::InvalidParameter("lambda must exceed 1".into()));
    }
    if *eta <= 0 || *eta >= 1 {
        return Err(SequenceError::InvalidParameter("eta must lie in (0, 1)".into()));
    }
    let expected = dp.len().saturating_sub(1);
    if schedule.len() != expected {
        return Err(SequenceError::ScheduleLength { expected, got: schedule.len() });
    }
    let holds = (1..=expected)
        .into_par_iter()
        .map(|n| condition_holds(lambda, eta, &dp.gap_at(n), schedule.at(n), max_doublings))
        .collect::<Result<Vec<bool>, _>>()?;
    let trailing = holds.iter().rev().take_while(|&&h| h).count();
    if trailing == 0 {
        return Err(SequenceError::NoValidIndex);
    }
    Ok(ScheduleCheck {
        first_valid: holds.len() - trailing + 1,
        holds,
    })
}
