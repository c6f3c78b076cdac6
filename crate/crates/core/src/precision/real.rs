use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::ops::PowAssignRound;
use rug::{Float, Integer, Rational};

/// Rounding direction for a single operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Toward −∞.
    Down,
    /// Toward +∞.
    Up,
    Nearest,
}

impl Rounding {
    pub(crate) fn to_round(self) -> Round {
        match self {
            Rounding::Down => Round::Down,
            Rounding::Up => Round::Up,
            Rounding::Nearest => Round::Nearest,
        }
    }
}

/// Binary floating-point real at an explicit working precision.
///
/// Every operation takes the target precision and a rounding direction; the
/// result is the correctly rounded value of the exact operation on the
/// (exact) operands.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigReal(Float);

impl BigReal {
    pub fn from_float(value: Float) -> Self {
        BigReal(value)
    }

    pub fn zero(prec: u32) -> Self {
        BigReal(Float::new(prec))
    }

    pub fn from_rational(value: &Rational, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, value, rnd.to_round()).0)
    }

    pub fn from_integer(value: &Integer, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, value, rnd.to_round()).0)
    }

    pub fn from_i64(value: i64, prec: u32) -> Self {
        BigReal(Float::with_val_round(prec, value, Round::Nearest).0)
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Exact rational value. Panics on NaN or infinities, which no kernel
    /// operation produces from finite positive-domain inputs.
    pub fn to_rational(&self) -> Rational {
        self.0.to_rational().expect("non-finite BigReal has no rational value")
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// Same value at a different precision, rounded in the given direction.
    pub fn with_prec(&self, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, &self.0, rnd.to_round()).0)
    }

    pub fn add(&self, other: &BigReal, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, &self.0 + &other.0, rnd.to_round()).0)
    }

    pub fn sub(&self, other: &BigReal, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, &self.0 - &other.0, rnd.to_round()).0)
    }

    pub fn mul(&self, other: &BigReal, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, &self.0 * &other.0, rnd.to_round()).0)
    }

    pub fn div(&self, other: &BigReal, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, &self.0 / &other.0, rnd.to_round()).0)
    }

    pub fn neg(&self) -> Self {
        BigReal(Float::with_val(self.0.prec(), -&self.0))
    }

    pub fn abs(&self) -> Self {
        BigReal(Float::with_val(self.0.prec(), self.0.abs_ref()))
    }

    pub fn ln(&self, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, self.0.ln_ref(), rnd.to_round()).0)
    }

    pub fn log2(&self, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, self.0.log2_ref(), rnd.to_round()).0)
    }

    pub fn exp(&self, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, self.0.exp_ref(), rnd.to_round()).0)
    }

    pub fn sqrt(&self, prec: u32, rnd: Rounding) -> Self {
        BigReal(Float::with_val_round(prec, self.0.sqrt_ref(), rnd.to_round()).0)
    }

    /// `self^exponent` for positive `self`.
    pub fn pow(&self, exponent: &BigReal, prec: u32, rnd: Rounding) -> Self {
        let mut out = Float::with_val(prec, &self.0);
        out.pow_assign_round(&exponent.0, rnd.to_round());
        BigReal(out)
    }

    /// Smallest representable value strictly above `self` at its precision.
    pub fn next_up(&self) -> Self {
        let mut v = self.0.clone();
        v.next_up();
        BigReal(v)
    }

    pub fn next_down(&self) -> Self {
        let mut v = self.0.clone();
        v.next_down();
        BigReal(v)
    }

    /// ⌊self⌋ as an exact integer.
    pub fn floor_int(&self) -> Integer {
        self.0.to_integer_round(Round::Down).expect("floor of non-finite BigReal").0
    }

    /// ⌈self⌉ as an exact integer.
    pub fn ceil_int(&self) -> Integer {
        self.0.to_integer_round(Round::Up).expect("ceil of non-finite BigReal").0
    }

    pub fn cmp_rational(&self, other: &Rational) -> Ordering {
        self.0.partial_cmp(other).expect("comparison with non-finite BigReal")
    }

    pub fn cmp_integer(&self, other: &Integer) -> Ordering {
        self.0.partial_cmp(other).expect("comparison with non-finite BigReal")
    }

    pub fn max(self, other: BigReal) -> BigReal {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: BigReal) -> BigReal {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({}, prec={})", self.0.to_string_radix(10, Some(24)), self.0.prec())
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}
