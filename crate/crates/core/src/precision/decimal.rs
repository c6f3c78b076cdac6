//! Exact decimal parsing and directed decimal printing.

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::{Integer, Rational};

use super::interval::RInterval;
use super::real::{BigReal, Rounding};
use super::KernelError;

/// Parses `"-12.5e-3"`, `"7"`, `".25"` or `"3/7"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, KernelError> {
    let s = text.trim();
    let bad = || KernelError::Parse(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: Integer = num.trim().parse().map_err(|_| bad())?;
        let den: Integer = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational::from((num, den)));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = body[i + 1..].parse().map_err(|_| bad())?;
            (&body[..i], e)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let digits: Integer = digits.parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i64;
    let scale = i32::try_from(scale).map_err(|_| bad())?;
    let mut value = Rational::from(digits);
    if scale >= 0 {
        value *= Integer::from(10).pow(scale as u32);
    } else {
        value /= Integer::from(10).pow(scale.unsigned_abs());
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact decimal string when the denominator divides a power of ten,
/// `"p/q"` otherwise.
pub fn format_rational(value: &Rational) -> String {
    let mut den = value.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den.is_divisible_u(2) {
        den /= 2;
        twos += 1;
    }
    while den.is_divisible_u(5) {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    if places == 0 {
        return value.numer().to_string();
    }
    let scaled = (value.numer() * Integer::from(10).pow(places)) / value.denom();
    let negative = scaled < 0;
    let digits = scaled.abs().to_string();
    let places = places as usize;
    let padded = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    let frac_part = frac_part.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// `value` rounded to `digits` significant decimal digits in direction `rnd`.
pub(crate) fn round_decimal(value: &Rational, digits: u32, rnd: Rounding) -> String {
    let digits = digits.max(1);
    if *value == 0 {
        return "0".to_string();
    }
    let negative = *value < 0;
    let magnitude = Rational::from(value.abs_ref());
    // magnitude rounding direction flips for negative values
    let up = match (rnd, negative) {
        (Rounding::Up, false) | (Rounding::Down, true) => Some(true),
        (Rounding::Down, false) | (Rounding::Up, true) => Some(false),
        (Rounding::Nearest, _) => None,
    };
    let mut e = decimal_exponent(&magnitude);
    let shift = i64::from(digits) - 1 - e;
    let mut scaled = magnitude * pow10(shift);
    let mut m = match up {
        Some(true) => Integer::from(scaled.ceil_ref()),
        Some(false) => Integer::from(scaled.floor_ref()),
        None => {
            scaled += Rational::from((1, 2));
            Integer::from(scaled.floor_ref())
        }
    };
    if m == Integer::from(10).pow(digits) {
        m /= 10;
        e += 1;
    }
    let text = m.to_string();
    let sign = if negative { "-" } else { "" };
    if (-7..21).contains(&e) {
        let point = e + 1;
        let body = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), text)
        } else if point as usize >= text.len() {
            format!("{}{}", text, "0".repeat(point as usize - text.len()))
        } else {
            format!("{}.{}", &text[..point as usize], &text[point as usize..])
        };
        let body = if body.contains('.') {
            body.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            body
        };
        format!("{sign}{body}")
    } else {
        let (head, tail) = text.split_at(1);
        let tail = tail.trim_end_matches('0');
        if tail.is_empty() {
            format!("{sign}{head}e{e}")
        } else {
            format!("{sign}{head}.{tail}e{e}")
        }
    }
}

/// `BigReal` printed with `digits` significant digits rounded in `rnd`.
pub(crate) fn real_to_decimal(value: &BigReal, digits: u32, rnd: Rounding) -> String {
    round_decimal(&value.to_rational(), digits, rnd)
}

fn pow10(k: i64) -> Rational {
    let p = Integer::from(10).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        Rational::from(p)
    } else {
        Rational::from((Integer::from(1), p))
    }
}

/// `e` with `10^e <= x < 10^(e+1)` for positive `x`.
fn decimal_exponent(x: &Rational) -> i64 {
    let bits = i64::from(x.numer().significant_bits()) - i64::from(x.denom().significant_bits());
    let mut e = (bits as f64 * std::f64::consts::LOG10_2).floor() as i64;
    while pow10(e).cmp(x) == Ordering::Greater {
        e -= 1;
    }
    while pow10(e + 1).cmp(x) != Ordering::Greater {
        e += 1;
    }
    e
}

/// Decimal digits shared by every point of an interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedDecimal {
    /// Truncation (toward −∞) of every point of the interval to `digits`
    /// significant digits.
    pub text: String,
    pub digits: u32,
}

impl RInterval {
    /// Longest significant-digit truncation (up to `max_digits`) on which
    /// both endpoints, and so every point in between, agree.
    pub fn to_certified_decimal(&self, max_digits: u32) -> CertifiedDecimal {
        let lo = self.lo().to_rational();
        let hi = self.hi().to_rational();
        for d in (1..=max_digits).rev() {
            let a = round_decimal(&lo, d, Rounding::Down);
            if a == round_decimal(&hi, d, Rounding::Down) {
                return CertifiedDecimal {
                    text: pad_significant(a, d),
                    digits: d,
                };
            }
        }
        CertifiedDecimal {
            text: String::new(),
            digits: 0,
        }
    }

    /// Decimal endpoints rounded outward: the printed interval contains `self`.
    pub fn to_decimal_outward(&self, digits: u32) -> (String, String) {
        (
            real_to_decimal(self.lo(), digits, Rounding::Down),
            real_to_decimal(self.hi(), digits, Rounding::Up),
        )
    }

    /// Decimal endpoints rounded inward: the printed interval lies inside `self`.
    pub fn to_decimal_inward(&self, digits: u32) -> (String, String) {
        (
            real_to_decimal(self.lo(), digits, Rounding::Up),
            real_to_decimal(self.hi(), digits, Rounding::Down),
        )
    }

    /// Outward enclosure of a decimal interval read back at `prec` bits.
    pub fn parse_outward(lo: &str, hi: &str, prec: u32) -> Result<RInterval, KernelError> {
        let lo = parse_rational(lo)?;
        let hi = parse_rational(hi)?;
        RInterval::new(
            BigReal::from_rational(&lo, prec, Rounding::Down),
            BigReal::from_rational(&hi, prec, Rounding::Up),
        )
    }
}

/// Restores trailing zeros so the text shows `digits` significant digits.
fn pad_significant(text: String, digits: u32) -> String {
    if text.contains('e') {
        return text;
    }
    let shown = text.trim_start_matches('-').replace('.', "").trim_start_matches('0').len();
    let missing = (digits as usize).saturating_sub(shown.max(1));
    if missing == 0 || text.trim_start_matches('-').trim_start_matches(['0', '.']).is_empty() {
        return text;
    }
    let point = if text.contains('.') { "" } else { "." };
    format!("{text}{point}{}", "0".repeat(missing))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn parses_decimal_forms() {
        assert_eq!(parse_rational("0.3").unwrap(), q(3, 10));
        assert_eq!(parse_rational("-1.25e2").unwrap(), q(-125, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("2.").unwrap(), q(2, 1));
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn formats_exact_decimals() {
        assert_eq!(format_rational(&q(5, 2)), "2.5");
        assert_eq!(format_rational(&q(-1, 4)), "-0.25");
        assert_eq!(format_rational(&q(1, 20)), "0.05");
        assert_eq!(format_rational(&q(42, 1)), "42");
        assert_eq!(format_rational(&q(1, 3)), "1/3");
        assert_eq!(parse_rational(&format_rational(&q(7, 3))).unwrap(), q(7, 3));
    }

    #[test]
    fn directed_decimal_rounding() {
        assert_eq!(round_decimal(&q(1, 3), 5, Rounding::Down), "0.33333");
        assert_eq!(round_decimal(&q(1, 3), 5, Rounding::Up), "0.33334");
        assert_eq!(round_decimal(&q(-1, 3), 3, Rounding::Down), "-0.334");
        assert_eq!(round_decimal(&q(999, 1), 2, Rounding::Up), "1000");
        assert_eq!(round_decimal(&q(1, 3_000_000_000), 3, Rounding::Down), "3.33e-10");
    }

    #[test]
    fn certified_digits_of_third() {
        let prec = 200;
        let third = RInterval::from_rational(&q(1, 3), prec);
        let d = third.to_certified_decimal(50);
        assert_eq!(d.digits, 50);
        assert!(d.text.starts_with("0.3333333333"));
        let wide = RInterval::parse_outward("3.14159", "3.14161", prec).unwrap();
        let d = wide.to_certified_decimal(50);
        assert_eq!(d.text, "3.141");
        assert_eq!(d.digits, 4);
        let near_two = RInterval::parse_outward("2", "2.0000000001", prec).unwrap();
        let d = near_two.to_certified_decimal(50);
        assert_eq!(d.text, "2.000000000");
        assert_eq!(d.digits, 10);
    }
}
