//! Directed-rounding arbitrary-precision arithmetic.
//!
//! [`BigReal`] wraps an MPFR float; every operation is correctly rounded in a
//! caller-chosen direction. [`RInterval`] builds outward (enclosing) and
//! inward (contained) interval results from those directed operations.
//!
//! All sequence data in this crate is exact (rationals), so most certified
//! decisions reduce to "compare `base^exp` with a rational" for rational
//! `base` and `exp`. [`RationalPow`] answers those questions by escalating
//! precision under a [`PrecisionPolicy`] and, when an enclosure keeps
//! straddling the answer, by an exact integer-power comparison.

mod decimal;
mod interval;
mod real;

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::{Integer, Rational};
use thiserror::Error;

pub use decimal::{format_rational, parse_rational, CertifiedDecimal};
pub use interval::{FracPart, IntCount, Mode, RInterval};
pub use real::{BigReal, Rounding};

/// Guard bits added on top of the bits needed to separate integers at the
/// largest scale touched.
pub const GUARD_BITS: u32 = 96;

/// Default number of precision doublings before giving up.
pub const DEFAULT_MAX_DOUBLINGS: u32 = 8;

/// Exact fallback comparisons are skipped when the integers involved would
/// exceed this many bits.
const EXACT_BITS_LIMIT: u64 = 1 << 24;

/// Exact fallbacks cheaper than this are tried before escalating precision.
const EXACT_BITS_EAGER: u64 = 1 << 14;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("power of a non-positive base")]
    NonPositiveBase,
    #[error("inward rounding crossed the endpoints; raise precision")]
    InwardCollapse,
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("interval bounds out of order")]
    InvertedBounds,
    #[error("non-finite value")]
    NonFinite,
    #[error("comparison undecided at {bits} bits")]
    PrecisionExhausted { bits: u32 },
    #[error("malformed number {0:?}")]
    Parse(String),
}

/// Working precision and how far it may be escalated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub base_bits: u32,
    pub max_doublings: u32,
}

impl PrecisionPolicy {
    pub fn new(base_bits: u32, max_doublings: u32) -> Self {
        PrecisionPolicy {
            base_bits: base_bits.max(64),
            max_doublings,
        }
    }

    /// `⌈q_max · log2(upper)⌉ + GUARD_BITS`, enough to tell apart consecutive
    /// integers near `upper^q_max`.
    pub fn for_scale(q_max: &Rational, upper: &Rational, max_doublings: u32) -> Self {
        let prec = 128;
        let log2_upper = BigReal::from_rational(upper, prec, Rounding::Up).log2(prec, Rounding::Up);
        let q = BigReal::from_rational(q_max, prec, Rounding::Up);
        let bits = q.mul(&log2_upper, prec, Rounding::Up).ceil_int();
        let bits = bits.to_u32().unwrap_or(u32::MAX / 4);
        PrecisionPolicy::new(bits.saturating_add(GUARD_BITS), max_doublings)
    }

    /// Precisions tried in order: base, 2·base, … up to the cap.
    pub fn ladder(&self) -> impl Iterator<Item = u32> {
        let base = self.base_bits;
        (0..=self.max_doublings).map(move |k| base.saturating_mul(1 << k.min(20)))
    }

    pub fn max_bits(&self) -> u32 {
        self.ladder().last().unwrap_or(self.base_bits)
    }

    pub fn doubled(&self) -> Self {
        PrecisionPolicy::new(self.base_bits.saturating_mul(2), self.max_doublings)
    }
}

/// `base^exp` for exact positive rational `base` and rational `exp`.
#[derive(Clone, Debug)]
pub struct RationalPow<'a> {
    pub base: &'a Rational,
    pub exp: &'a Rational,
}

impl<'a> RationalPow<'a> {
    pub fn new(base: &'a Rational, exp: &'a Rational) -> Self {
        RationalPow { base, exp }
    }

    /// Outward enclosure at `prec` bits.
    pub fn enclose(&self, prec: u32) -> Result<RInterval, KernelError> {
        if *self.base <= 0 {
            return Err(KernelError::NonPositiveBase);
        }
        let base = RInterval::from_rational(self.base, prec);
        let exp = RInterval::from_rational(self.exp, prec);
        base.pow(&exp, prec, Mode::Outward)
    }

    /// Certified comparison of `base^exp` with `target`.
    pub fn cmp(&self, target: &Rational, policy: &PrecisionPolicy) -> Result<Ordering, KernelError> {
        if *self.base <= 0 {
            return Err(KernelError::NonPositiveBase);
        }
        if *target <= 0 {
            return Ok(Ordering::Greater);
        }
        let mut last_bits = policy.base_bits;
        for prec in policy.ladder() {
            last_bits = prec;
            let enc = self.enclose(prec)?;
            if enc.hi().cmp_rational(target) == Ordering::Less {
                return Ok(Ordering::Less);
            }
            if enc.lo().cmp_rational(target) == Ordering::Greater {
                return Ok(Ordering::Greater);
            }
            if let Some(ord) = self.exact_cmp(target, EXACT_BITS_EAGER) {
                return Ok(ord);
            }
        }
        self.exact_cmp(target, EXACT_BITS_LIMIT)
            .ok_or(KernelError::PrecisionExhausted { bits: last_bits })
    }

    /// Certified `⌈base^exp⌉`.
    pub fn ceil(&self, policy: &PrecisionPolicy) -> Result<Integer, KernelError> {
        self.round_to_int(policy, true)
    }

    /// Certified `⌊base^exp⌋`.
    pub fn floor(&self, policy: &PrecisionPolicy) -> Result<Integer, KernelError> {
        self.round_to_int(policy, false)
    }

    fn round_to_int(&self, policy: &PrecisionPolicy, ceil: bool) -> Result<Integer, KernelError> {
        let mut last_bits = policy.base_bits;
        let mut candidate = None;
        for prec in policy.ladder() {
            last_bits = prec;
            let enc = self.enclose(prec)?;
            let count = if ceil { enc.ceil() } else { enc.floor() };
            match count {
                IntCount::Exact(k) => return Ok(k),
                IntCount::Ambiguous(c) => {
                    if let Some(k) = self.resolve_straddle(&enc, &c, ceil, EXACT_BITS_EAGER) {
                        return Ok(k);
                    }
                    candidate = Some((enc, c));
                }
            }
        }
        if let Some((enc, c)) = candidate {
            if let Some(k) = self.resolve_straddle(&enc, &c, ceil, EXACT_BITS_LIMIT) {
                return Ok(k);
            }
        }
        Err(KernelError::PrecisionExhausted { bits: last_bits })
    }

    /// The enclosure straddles exactly the integer `c`; settle which side the
    /// exact value falls on.
    fn resolve_straddle(&self, enc: &RInterval, c: &Integer, ceil: bool, limit: u64) -> Option<Integer> {
        // two or more integers inside: not a single straddle
        let next = Integer::from(c + 1);
        let prev = Integer::from(c - 1);
        if enc.hi().cmp_integer(&next) != Ordering::Less || enc.lo().cmp_integer(&prev) != Ordering::Greater {
            return None;
        }
        let ord = self.exact_cmp(&Rational::from(c), limit)?;
        Some(match (ceil, ord) {
            (true, Ordering::Greater) => next,
            (true, _) => c.clone(),
            (false, Ordering::Less) => prev,
            (false, _) => c.clone(),
        })
    }

    /// Exact comparison through integer powers; `None` if too large.
    fn exact_cmp(&self, target: &Rational, limit: u64) -> Option<Ordering> {
        // base^(s/t) vs T  <=>  base^s vs T^t  (t > 0, both sides positive)
        let s = self.exp.numer();
        let t = self.exp.denom();
        let s_abs = s.clone().abs().to_u32()?;
        let t = t.to_u32()?;
        let base_bits = u64::from(self.base.numer().significant_bits() + self.base.denom().significant_bits());
        let target_bits = u64::from(target.numer().significant_bits() + target.denom().significant_bits());
        let cost = u64::from(s_abs) * base_bits + u64::from(t) * target_bits;
        if cost > limit {
            return None;
        }
        let lhs = Rational::from(self.base.pow(s_abs));
        let rhs = Rational::from(target.pow(t));
        Some(if *s >= 0 {
            lhs.cmp(&rhs)
        } else {
            // base^-|s| vs T^t  <=>  1 vs T^t · base^|s|
            Rational::from(1).cmp(&(rhs * lhs))
        })
    }
}
