use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use rug::{Integer, Rational};

use super::AnalysisError;
use crate::precision::{format_rational, BigReal, FracPart, IntCount, Mode, PrecisionPolicy, RInterval, GUARD_BITS};
use crate::sequences::{DensifiedPair, EpsilonSchedule};

/// One exponent/target pair to check, with its optional threshold.
#[derive(Clone, Copy, Debug)]
pub struct Term<'a> {
    pub n: usize,
    pub q: &'a Rational,
    pub r: &'a Rational,
    pub threshold: Option<&'a Rational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Pass,
    Fail,
    /// No threshold given.
    Unchecked,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRow {
    pub n: usize,
    pub q: Rational,
    pub r: Rational,
    /// Outward enclosure of `α^q`.
    pub power: RInterval,
    pub frac: FracPart,
    /// Outward enclosure of `‖α^q − r‖`.
    pub dist: RInterval,
    /// The integer nearest to `α^q − r`, when certified.
    pub nearest: Option<Integer>,
    pub threshold: Option<Rational>,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifySummary {
    pub checked: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest upper distance bound over the last half of the rows.
    pub max_tail_dist: Option<BigReal>,
    /// Whether upper distance bounds never increase over the last half.
    pub tail_nonincreasing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub rows: Vec<VerifyRow>,
    pub summary: VerifySummary,
}

impl VerificationReport {
    pub fn first_failure(&self) -> Option<&VerifyRow> {
        self.rows.iter().find(|r| r.status == RowStatus::Fail)
    }

    pub fn all_passed(&self) -> bool {
        self.first_failure().is_none()
    }

    /// One row per index: `n,q,r,frac_lo,frac_hi,dist_lo,dist_hi,threshold,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,q,r,frac_lo,frac_hi,dist_lo,dist_hi,threshold,status\n");
        for row in &self.rows {
            let (flo, fhi) = match &row.frac {
                FracPart::Value(iv) => iv.to_decimal_outward(20),
                FracPart::Wrapped => ("WRAPPED".to_string(), "WRAPPED".to_string()),
            };
            let (dlo, dhi) = row.dist.to_decimal_outward(20);
            let status = match row.status {
                RowStatus::Pass => "pass",
                RowStatus::Fail => "FAIL",
                RowStatus::Unchecked => "-",
            };
            let _ = writeln!(
                out,
                "{},{},{},{flo},{fhi},{dlo},{dhi},{},{status}",
                row.n,
                format_rational(&row.q),
                format_rational(&row.r),
                row.threshold.as_ref().map(format_rational).unwrap_or_default()
            );
        }
        out
    }

    /// `key = value` summary lines.
    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "rows = {}", self.rows.len());
        let _ = writeln!(out, "checked = {}", s.checked);
        let _ = writeln!(out, "passed = {}", s.passed);
        let _ = writeln!(out, "failed = {}", s.failed);
        if let Some(d) = &s.max_tail_dist {
            let (_, hi) = RInterval::point(d.clone()).to_decimal_outward(20);
            let _ = writeln!(out, "max_tail_dist = \"{hi}\"");
        }
        let _ = writeln!(out, "tail_nonincreasing = {}", s.tail_nonincreasing);
        if let Some(row) = self.first_failure() {
            let _ = writeln!(out, "first_failure = {}", row.n);
        }
        out
    }
}

/// Checks `‖α^(q_n) − r_n‖` for `n` in `range` (one-based indices into
/// `q` and `r`); `thresholds[n-1]` is compared when present.
pub fn verify(
    alpha: &RInterval,
    q: &[Rational],
    r: &[Rational],
    thresholds: Option<&[Rational]>,
    range: std::ops::RangeInclusive<usize>,
    max_doublings: u32,
) -> Result<VerificationReport, AnalysisError> {
    if *range.start() < 1 || *range.end() > q.len().min(r.len()) {
        return Err(AnalysisError::InvalidInput(format!(
            "index range {}..={} outside the sequence (length {})",
            range.start(),
            range.end(),
            q.len()
        )));
    }
    let terms: Vec<Term> = range
        .map(|n| Term {
            n,
            q: &q[n - 1],
            r: &r[n - 1],
            threshold: thresholds.and_then(|t| t.get(n - 1)),
        })
        .collect();
    verify_terms(alpha, &terms, max_doublings)
}

/// Original-sequence terms whose position in the working sequence lies in
/// `from..=to`, each checked against the radius at that position.
pub fn inclusion_terms<'a>(
    original_q: &'a [Rational],
    original_r: &'a [Rational],
    dp: &DensifiedPair,
    es: &'a EpsilonSchedule,
    from: usize,
    to: usize,
) -> Vec<Term<'a>> {
    dp.origin_map()
        .iter()
        .enumerate()
        .filter_map(|(i, &pos)| {
            let level = pos + 1;
            (level >= from && level <= to && level <= es.len()).then(|| Term {
                n: i + 1,
                q: &original_q[i],
                r: &original_r[i],
                threshold: Some(es.at(level)),
            })
        })
        .collect()
}

pub fn verify_terms(alpha: &RInterval, terms: &[Term], max_doublings: u32) -> Result<VerificationReport, AnalysisError> {
    if alpha.lo().cmp_rational(&Rational::from(1)) != Ordering::Greater {
        return Err(AnalysisError::InvalidInput("alpha enclosure must lie above 1".into()));
    }
    let rows = terms.par_iter().map(|t| verify_one(alpha, t, max_doublings)).collect::<Result<Vec<_>, _>>()?;
    let checked = rows.iter().filter(|r| r.status != RowStatus::Unchecked).count();
    let passed = rows.iter().filter(|r| r.status == RowStatus::Pass).count();
    let failed = rows.iter().filter(|r| r.status == RowStatus::Fail).count();
    let tail = &rows[rows.len() / 2..];
    let max_tail_dist = tail.iter().map(|r| r.dist.hi().clone()).reduce(BigReal::max);
    let tail_nonincreasing = tail.windows(2).all(|w| w[1].dist.hi() <= w[0].dist.hi());
    Ok(VerificationReport {
        rows,
        summary: VerifySummary {
            checked,
            passed,
            failed,
            max_tail_dist,
            tail_nonincreasing,
        },
    })
}

fn verify_one(alpha: &RInterval, t: &Term, max_doublings: u32) -> Result<VerifyRow, AnalysisError> {
    let upper = alpha.hi().to_rational();
    let start = PrecisionPolicy::for_scale(t.q, &upper, max_doublings)
        .base_bits
        .max(alpha.prec() + 64)
        .max(GUARD_BITS);
    let policy = PrecisionPolicy::new(start, max_doublings);
    let mut last_bits = start;
    for prec in policy.ladder() {
        last_bits = prec;
        let exponent = RInterval::from_rational(t.q, prec);
        let power = alpha.pow(&exponent, prec, Mode::Outward)?;
        let shifted = power.sub(&RInterval::from_rational(t.r, prec), prec);
        let dist = shifted.dist_nearest_int();
        let status = match t.threshold {
            None => RowStatus::Unchecked,
            Some(thr) if dist.hi().cmp_rational(thr) == Ordering::Less => RowStatus::Pass,
            Some(thr) if dist.lo().cmp_rational(thr) != Ordering::Less => RowStatus::Fail,
            Some(_) => continue,
        };
        let half = RInterval::from_rational(&Rational::from((1, 2)), prec);
        let nearest = match shifted.add(&half, prec).floor() {
            IntCount::Exact(k) => Some(k),
            IntCount::Ambiguous(_) => None,
        };
        return Ok(VerifyRow {
            n: t.n,
            q: t.q.clone(),
            r: t.r.clone(),
            frac: power.frac_part(),
            power,
            dist,
            nearest,
            threshold: t.threshold.cloned(),
            status,
        });
    }
    Err(AnalysisError::PrecisionExhausted { index: t.n, bits: last_bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn powers_of_two_are_integers() {
        let alpha = RInterval::from_rational(&q(2, 1), 64);
        let qs: Vec<Rational> = (1..=10).map(|n| q(n, 1)).collect();
        let rs = vec![Rational::new(); 10];
        let thr = vec![q(1, 1000); 10];
        let report = verify(&alpha, &qs, &rs, Some(&thr), 1..=10, 4).unwrap();
        assert!(report.all_passed());
        for (i, row) in report.rows.iter().enumerate() {
            assert!(row.dist.is_point() && row.dist.hi().is_zero());
            assert_eq!(row.nearest.as_ref().unwrap(), &Integer::from(1u32 << (i + 1)));
        }
    }

    #[test]
    fn failing_threshold_is_reported() {
        // 1.5^2 = 2.25 is 0.25 from an integer
        let alpha = RInterval::from_rational(&q(3, 2), 64);
        let qs = vec![q(2, 1)];
        let rs = vec![Rational::new()];
        let thr = vec![q(1, 10)];
        let report = verify(&alpha, &qs, &rs, Some(&thr), 1..=1, 2).unwrap();
        assert_eq!(report.rows[0].status, RowStatus::Fail);
        assert_eq!(report.first_failure().unwrap().n, 1);
    }

    #[test]
    fn wide_enclosure_exhausts_precision() {
        // distance enclosure straddles the threshold no matter the precision
        let alpha = RInterval::parse_outward("1.99", "2.01", 64).unwrap();
        let qs = vec![q(1, 1)];
        let rs = vec![Rational::new()];
        let thr = vec![q(1, 200)];
        let err = verify(&alpha, &qs, &rs, Some(&thr), 1..=1, 1).unwrap_err();
        assert!(matches!(err, AnalysisError::PrecisionExhausted { index: 1, .. }));
    }

    #[test]
    fn rejects_alpha_below_one() {
        let alpha = RInterval::from_rational(&q(1, 2), 64);
        let err = verify(&alpha, &[q(1, 1)], &[q(0, 1)], None, 1..=1, 1).unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidInput(_)));
    }

    #[test]
    fn csv_has_one_row_per_index() {
        let alpha = RInterval::from_rational(&q(5, 2), 64);
        let qs: Vec<Rational> = (1..=3).map(|n| q(n, 1)).collect();
        let rs = vec![Rational::new(); 3];
        let csv = verify(&alpha, &qs, &rs, None, 1..=3, 1).unwrap().to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,1,0,0.5,0.5,0.5,0.5,,-"));
    }
}
