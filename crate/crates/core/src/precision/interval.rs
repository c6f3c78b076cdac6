use std::cmp::Ordering;
use std::fmt;

use rug::{Integer, Rational};

use super::real::{BigReal, Rounding};
use super::KernelError;

/// Whether an interval result must contain the exact set (verification) or
/// be contained in it (construction).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Outward,
    Inward,
}

/// Result of a certified floor or ceiling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntCount {
    /// Every point of the interval maps to this integer.
    Exact(Integer),
    /// The interval straddles this integer, so the answer is not determined.
    Ambiguous(Integer),
}

impl IntCount {
    pub fn exact(&self) -> Option<&Integer> {
        match self {
            IntCount::Exact(k) => Some(k),
            IntCount::Ambiguous(_) => None,
        }
    }
}

/// Fractional part of an interval, or a marker when the interval crosses an
/// integer and the image splits into two arcs.
#[derive(Clone, Debug, PartialEq)]
pub enum FracPart {
    Value(RInterval),
    Wrapped,
}

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, PartialEq)]
pub struct RInterval {
    lo: BigReal,
    hi: BigReal,
}

impl RInterval {
    pub fn new(lo: BigReal, hi: BigReal) -> Result<Self, KernelError> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(KernelError::NonFinite);
        }
        if lo > hi {
            return Err(KernelError::InvertedBounds);
        }
        Ok(RInterval { lo, hi })
    }

    pub fn point(x: BigReal) -> Self {
        RInterval { lo: x.clone(), hi: x }
    }

    /// Tightest enclosure of an exact rational at `prec` bits.
    pub fn from_rational(value: &Rational, prec: u32) -> Self {
        RInterval {
            lo: BigReal::from_rational(value, prec, Rounding::Down),
            hi: BigReal::from_rational(value, prec, Rounding::Up),
        }
    }

    pub fn from_integer(value: &Integer, prec: u32) -> Self {
        RInterval {
            lo: BigReal::from_integer(value, prec, Rounding::Down),
            hi: BigReal::from_integer(value, prec, Rounding::Up),
        }
    }

    pub fn lo(&self) -> &BigReal {
        &self.lo
    }

    pub fn hi(&self) -> &BigReal {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn width(&self, prec: u32) -> BigReal {
        self.hi.sub(&self.lo, prec, Rounding::Up)
    }

    pub fn midpoint(&self) -> BigReal {
        let prec = self.prec() + 1;
        let sum = self.lo.add(&self.hi, prec, Rounding::Nearest);
        sum.div(&BigReal::from_i64(2, 2), prec, Rounding::Nearest)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_rational(&self, x: &Rational) -> bool {
        self.lo.cmp_rational(x) != Ordering::Greater && self.hi.cmp_rational(x) != Ordering::Less
    }

    pub fn contains_real(&self, x: &BigReal) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn is_subset_of(&self, other: &RInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &RInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// True when every point of `self` is strictly below every point of `other`.
    pub fn strictly_below(&self, other: &RInterval) -> bool {
        self.hi < other.lo
    }

    pub fn hull(&self, other: &RInterval) -> RInterval {
        RInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn neg(&self) -> RInterval {
        RInterval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn add(&self, other: &RInterval, prec: u32) -> RInterval {
        RInterval {
            lo: self.lo.add(&other.lo, prec, Rounding::Down),
            hi: self.hi.add(&other.hi, prec, Rounding::Up),
        }
    }

    pub fn sub(&self, other: &RInterval, prec: u32) -> RInterval {
        RInterval {
            lo: self.lo.sub(&other.hi, prec, Rounding::Down),
            hi: self.hi.sub(&other.lo, prec, Rounding::Up),
        }
    }

    pub fn mul(&self, other: &RInterval, prec: u32) -> RInterval {
        let corners = [(&self.lo, &other.lo), (&self.lo, &other.hi), (&self.hi, &other.lo), (&self.hi, &other.hi)];
        let lo = corners
            .iter()
            .map(|(a, b)| a.mul(b, prec, Rounding::Down))
            .reduce(BigReal::min)
            .expect("four corners");
        let hi = corners
            .iter()
            .map(|(a, b)| a.mul(b, prec, Rounding::Up))
            .reduce(BigReal::max)
            .expect("four corners");
        RInterval { lo, hi }
    }

    pub fn div(&self, other: &RInterval, prec: u32) -> Result<RInterval, KernelError> {
        if other.lo.is_zero() || other.hi.is_zero() || (other.lo.as_float().is_sign_negative() != other.hi.as_float().is_sign_negative()) {
            return Err(KernelError::DivisionByZero);
        }
        let corners = [(&self.lo, &other.lo), (&self.lo, &other.hi), (&self.hi, &other.lo), (&self.hi, &other.hi)];
        let lo = corners
            .iter()
            .map(|(a, b)| a.div(b, prec, Rounding::Down))
            .reduce(BigReal::min)
            .expect("four corners");
        let hi = corners
            .iter()
            .map(|(a, b)| a.div(b, prec, Rounding::Up))
            .reduce(BigReal::max)
            .expect("four corners");
        Ok(RInterval { lo, hi })
    }

    pub fn ln(&self, prec: u32) -> Result<RInterval, KernelError> {
        if self.lo.as_float().is_sign_negative() || self.lo.is_zero() {
            return Err(KernelError::NonPositiveBase);
        }
        Ok(RInterval {
            lo: self.lo.ln(prec, Rounding::Down),
            hi: self.hi.ln(prec, Rounding::Up),
        })
    }

    pub fn exp(&self, prec: u32) -> RInterval {
        RInterval {
            lo: self.lo.exp(prec, Rounding::Down),
            hi: self.hi.exp(prec, Rounding::Up),
        }
    }

    pub fn sqrt(&self, prec: u32) -> Result<RInterval, KernelError> {
        if self.lo.as_float().is_sign_negative() && !self.lo.is_zero() {
            return Err(KernelError::NonPositiveBase);
        }
        Ok(RInterval {
            lo: self.lo.sqrt(prec, Rounding::Down),
            hi: self.hi.sqrt(prec, Rounding::Up),
        })
    }

    /// `{x^y : x in self, y in exponent}` for positive bases.
    ///
    /// Outward: the result encloses the exact image. Inward: `self` is read as
    /// an exact interval and `exponent` as an enclosure of one unknown exact
    /// exponent; the result lies inside the image for every such exponent.
    pub fn pow(&self, exponent: &RInterval, prec: u32, mode: Mode) -> Result<RInterval, KernelError> {
        if self.lo.as_float().is_sign_negative() || self.lo.is_zero() {
            return Err(KernelError::NonPositiveBase);
        }
        match mode {
            Mode::Outward => {
                let corners = [
                    (&self.lo, &exponent.lo),
                    (&self.lo, &exponent.hi),
                    (&self.hi, &exponent.lo),
                    (&self.hi, &exponent.hi),
                ];
                let lo = corners
                    .iter()
                    .map(|(x, y)| x.pow(y, prec, Rounding::Down))
                    .reduce(BigReal::min)
                    .expect("four corners");
                let hi = corners
                    .iter()
                    .map(|(x, y)| x.pow(y, prec, Rounding::Up))
                    .reduce(BigReal::max)
                    .expect("four corners");
                Ok(RInterval { lo, hi })
            }
            Mode::Inward => {
                let positive = exponent.lo.as_float().is_sign_positive() && !exponent.lo.is_zero();
                let negative = exponent.hi.as_float().is_sign_negative() && !exponent.hi.is_zero();
                let (left, right) = if positive {
                    (&self.lo, &self.hi)
                } else if negative {
                    (&self.hi, &self.lo)
                } else {
                    return Err(KernelError::InwardCollapse);
                };
                let lo = left.pow(&exponent.lo, prec, Rounding::Up).max(left.pow(&exponent.hi, prec, Rounding::Up));
                let hi = right.pow(&exponent.lo, prec, Rounding::Down).min(right.pow(&exponent.hi, prec, Rounding::Down));
                if lo > hi {
                    return Err(KernelError::InwardCollapse);
                }
                Ok(RInterval { lo, hi })
            }
        }
    }

    /// Certified floor.
    pub fn floor(&self) -> IntCount {
        let a = self.lo.floor_int();
        let b = self.hi.floor_int();
        if a == b {
            IntCount::Exact(a)
        } else {
            IntCount::Ambiguous(a + 1)
        }
    }

    /// Certified ceiling.
    pub fn ceil(&self) -> IntCount {
        let a = self.lo.ceil_int();
        let b = self.hi.ceil_int();
        if a == b {
            IntCount::Exact(a)
        } else {
            IntCount::Ambiguous(a)
        }
    }

    /// Outward enclosure of `{‖t‖ : t in self}`, always inside `[0, 1/2]`.
    pub fn dist_nearest_int(&self) -> RInterval {
        let prec = self.prec();
        let lo = self.lo.to_rational();
        let hi = self.hi.to_rational();
        let half = Rational::from((1, 2));
        if Rational::from(&hi - &lo) >= 1 {
            return RInterval {
                lo: BigReal::zero(prec),
                hi: BigReal::from_rational(&half, prec, Rounding::Up),
            };
        }
        let contains_integer = Rational::from(lo.ceil_ref()) <= hi;
        let shifted = Rational::from(&lo - &half);
        let first_half_integer = Rational::from(shifted.ceil_ref()) + &half;
        let contains_half = first_half_integer <= hi;
        let d_lo = dist_to_nearest(&lo);
        let d_hi = dist_to_nearest(&hi);
        let min = if contains_integer {
            Rational::new()
        } else if d_lo < d_hi {
            d_lo.clone()
        } else {
            d_hi.clone()
        };
        let max = if contains_half {
            half
        } else if d_lo > d_hi {
            d_lo
        } else {
            d_hi
        };
        RInterval {
            lo: BigReal::from_rational(&min, prec, Rounding::Down),
            hi: BigReal::from_rational(&max, prec, Rounding::Up),
        }
    }

    /// Outward enclosure of `{t − ⌊t⌋}` when `self` stays between two
    /// consecutive integers, `Wrapped` otherwise.
    pub fn frac_part(&self) -> FracPart {
        match self.floor() {
            IntCount::Exact(k) => {
                let prec = self.prec();
                let k = BigReal::from_integer(&k, prec.max(k.significant_bits()), Rounding::Nearest);
                FracPart::Value(RInterval {
                    lo: self.lo.sub(&k, prec, Rounding::Down),
                    hi: self.hi.sub(&k, prec, Rounding::Up),
                })
            }
            IntCount::Ambiguous(_) => FracPart::Wrapped,
        }
    }
}

/// Exact `‖x‖` for a rational.
pub(crate) fn dist_to_nearest(x: &Rational) -> Rational {
    let down = x - Rational::from(x.floor_ref());
    let up = Rational::from(1 - &down);
    if down <= up {
        down
    } else {
        up
    }
}

impl fmt::Debug for RInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            self.lo.as_float().to_string_radix(10, Some(30)),
            self.hi.as_float().to_string_radix(10, Some(30))
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> RInterval {
        RInterval::new(
            BigReal::from_rational(&Rational::from_f64(lo).unwrap(), 128, Rounding::Nearest),
            BigReal::from_rational(&Rational::from_f64(hi).unwrap(), 128, Rounding::Nearest),
        )
        .unwrap()
    }

    fn q(num: i64, den: i64) -> Rational {
        Rational::from((num, den))
    }

    #[test]
    fn two_to_the_tenth_is_tight() {
        let r = iv(2.0, 2.0).pow(&iv(10.0, 10.0), 64, Mode::Outward).unwrap();
        assert!(r.contains_rational(&q(1024, 1)));
        assert!(r.width(64).cmp_rational(&q(0, 1)) != Ordering::Greater || r.lo().next_up().next_up() >= *r.hi());
    }

    #[test]
    fn square_root_of_four() {
        let r = iv(4.0, 4.0).pow(&iv(0.5, 0.5), 64, Mode::Outward).unwrap();
        assert!(r.contains_rational(&q(2, 1)));
    }

    #[test]
    fn fourth_root_of_three_squares_back() {
        let prec = 128;
        let third = RInterval::from_rational(&q(1, 4), prec);
        let root = iv(3.0, 3.0).pow(&third, prec, Mode::Outward).unwrap();
        assert!(root.lo().cmp_rational(&q(131607, 100000)) == Ordering::Greater);
        assert!(root.hi().cmp_rational(&q(131608, 100000)) == Ordering::Less);
        let squared = root.mul(&root, prec);
        let fourth = squared.mul(&squared, prec);
        assert!(fourth.contains_rational(&q(3, 1)));
    }

    #[test]
    fn inward_pow_sits_inside_outward() {
        let base = iv(2.0, 3.0);
        let e = RInterval::from_rational(&q(1, 3), 96);
        let inner = base.pow(&e, 96, Mode::Inward).unwrap();
        let outer = base.pow(&e, 96, Mode::Outward).unwrap();
        assert!(inner.is_subset_of(&outer));
        assert!(inner.lo().cmp_rational(&q(125992, 100000)) == Ordering::Greater);
    }

    #[test]
    fn inward_pow_collapses_on_thin_base() {
        let base = iv(2.0, 2.0);
        let e = RInterval::from_rational(&q(1, 3), 64);
        assert_eq!(base.pow(&e, 64, Mode::Inward), Err(KernelError::InwardCollapse));
    }

    #[test]
    fn pow_rejects_non_positive_base() {
        let e = iv(2.0, 2.0);
        assert_eq!(iv(-1.0, 2.0).pow(&e, 64, Mode::Outward), Err(KernelError::NonPositiveBase));
        assert_eq!(iv(0.0, 2.0).pow(&e, 64, Mode::Outward), Err(KernelError::NonPositiveBase));
    }

    #[test]
    fn floor_examples() {
        assert_eq!(iv(2.2, 2.8).floor(), IntCount::Exact(Integer::from(2)));
        assert_eq!(iv(2.9999, 3.0001).floor(), IntCount::Ambiguous(Integer::from(3)));
        assert_eq!(iv(-0.5, -0.4).floor(), IntCount::Exact(Integer::from(-1)));
        assert_eq!(iv(2.9999, 3.0001).ceil(), IntCount::Ambiguous(Integer::from(3)));
        assert_eq!(iv(2.2, 2.8).ceil(), IntCount::Exact(Integer::from(3)));
    }

    #[test]
    fn dist_nearest_examples() {
        let d = iv(2.75, 2.75).dist_nearest_int();
        assert!(d.contains_rational(&q(1, 4)));
        let d = iv(3.0, 3.0).dist_nearest_int();
        assert!(d.contains_rational(&q(0, 1)) && d.hi().is_zero());
        let d = iv(2.4, 2.6).dist_nearest_int();
        // dense-sampling oracle
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for i in 0..=10_000 {
            let t = 2.4 + 0.2 * (i as f64) / 10_000.0;
            let dist = (t - t.round()).abs();
            lo = lo.min(dist);
            hi = hi.max(dist);
        }
        assert!((d.lo().to_f64() - lo).abs() < 1e-9);
        assert!((d.hi().to_f64() - hi).abs() < 1e-9);
        assert!(d.hi().cmp_rational(&q(1, 2)) == Ordering::Equal);
    }

    #[test]
    fn dist_of_wide_interval_is_full_range() {
        let d = iv(0.1, 5.0).dist_nearest_int();
        assert!(d.lo().is_zero());
        assert_eq!(d.hi().cmp_rational(&q(1, 2)), Ordering::Equal);
    }

    #[test]
    fn frac_examples() {
        match iv(2.25, 2.3).frac_part() {
            FracPart::Value(f) => {
                assert!(f.contains_rational(&q(1, 4)));
                assert!(f.hi().to_f64() - 0.3 < 1e-15);
            }
            FracPart::Wrapped => panic!("should not wrap"),
        }
        assert_eq!(iv(2.9, 3.1).frac_part(), FracPart::Wrapped);
        match iv(-0.25, -0.25).frac_part() {
            FracPart::Value(f) => assert!(f.contains_rational(&q(3, 4))),
            FracPart::Wrapped => panic!("should not wrap"),
        }
    }

    #[test]
    fn division_by_interval_containing_zero_fails() {
        assert_eq!(iv(1.0, 2.0).div(&iv(-1.0, 1.0), 64), Err(KernelError::DivisionByZero));
    }
}
