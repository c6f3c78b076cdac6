use std::cmp::Ordering;
use std::fmt::Write as _;

use rug::float::Round;
use rug::{Float, Integer, Rational};

use super::AnalysisError;
use crate::cantor::CantorTree;
use crate::precision::{BigReal, RInterval};

const WORK_BITS: u32 = 128;

/// Inputs to the dimension bound at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionLevel {
    pub n: usize,
    /// Number of intervals at this level.
    pub count: Integer,
    /// Children per interval at the next level.
    pub branch: Integer,
    /// Lower bound on the smallest gap between intervals of this level.
    pub gap: BigReal,
    pub sampled: bool,
    /// Exponent at this level, for the gap-scale diagnostic.
    pub q: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionRow {
    pub n: usize,
    pub count: Integer,
    pub branch: Integer,
    pub gap: BigReal,
    /// Running minimum of the gaps up to this level.
    pub gap_used: BigReal,
    /// `log(count) / −log(branch · gap_used)`, unclamped.
    pub raw: f64,
    /// `raw` clamped into `[0, 1]`.
    pub partial: f64,
    pub clamped: bool,
    pub gap_substituted: bool,
    pub sampled: bool,
    /// `gap · q · (λ+δ)^(q−1)`, which should stay bounded below.
    pub gap_scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionReport {
    pub rows: Vec<DimensionRow>,
    /// Minimum of the clamped partial bounds over the last third of levels.
    pub tail_min: f64,
    /// Three-point extrapolation of the partial bounds, assuming
    /// `b = L + c/x + d/x²` with `x` the exponent `q_n` when known and the
    /// level index otherwise.
    pub extrapolated: f64,
    pub gaps_substituted: bool,
    pub closed_form: Option<RInterval>,
    pub limit: Option<RInterval>,
}

impl DimensionReport {
    pub fn last(&self) -> &DimensionRow {
        self.rows.last().expect("report has at least three rows")
    }

    /// Attaches the closed-form values for comparison.
    pub fn with_closed_form(mut self, lambda: &Rational, delta: &Rational, eps: &Rational, eta: &Rational) -> Result<Self, AnalysisError> {
        self.closed_form = Some(closed_form_bound(lambda, delta, eps, eta, WORK_BITS)?);
        self.limit = Some(limit_bound(lambda, delta, WORK_BITS)?);
        Ok(self)
    }

    /// One row per level: `n,count_log10,branch,gap_log10,partial_raw,partial,flags`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,log10_count,branch,log10_gap,log10_gap_used,raw,partial,clamped,gap_substituted,sampled,gap_scale\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{},{:.6},{:.6},{:.9},{:.9},{},{},{},{}",
                r.n,
                log10_integer(&r.count),
                r.branch,
                log10_real(&r.gap),
                log10_real(&r.gap_used),
                r.raw,
                r.partial,
                u8::from(r.clamped),
                u8::from(r.gap_substituted),
                u8::from(r.sampled),
                r.gap_scale.map(|g| format!("{g:.6e}")).unwrap_or_default()
            );
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let last = self.last();
        let _ = writeln!(out, "levels = {}", self.rows.len());
        let _ = writeln!(out, "deepest_level = {}", last.n);
        let _ = writeln!(out, "deepest_partial = {:.9}", last.partial);
        let _ = writeln!(out, "tail_min = {:.9}", self.tail_min);
        let _ = writeln!(out, "extrapolated = {:.9}", self.extrapolated);
        let _ = writeln!(out, "gaps_substituted = {}", self.gaps_substituted);
        let _ = writeln!(out, "sampled_levels = {}", self.rows.iter().filter(|r| r.sampled).count());
        if let Some(c) = &self.closed_form {
            let _ = writeln!(out, "closed_form = {:.9}", c.midpoint().to_f64());
        }
        if let Some(l) = &self.limit {
            let _ = writeln!(out, "limit = {:.9}", l.midpoint().to_f64());
        }
        out
    }
}

fn ln_integer(x: &Integer) -> Float {
    Float::with_val(WORK_BITS, x).ln()
}

fn log10_integer(x: &Integer) -> f64 {
    Float::with_val(WORK_BITS, x).log10().to_f64()
}

fn log10_real(x: &BigReal) -> f64 {
    Float::with_val(WORK_BITS, x.as_float()).log10().to_f64()
}

/// Partial dimension bounds `log(count_n) / −log(m_n γ_n)` per level.
///
/// Gaps are replaced by their running minimum so the sequence used is
/// non-increasing; rows where that changed the gap are flagged.
pub fn falconer_from_levels(levels: &[DimensionLevel], upper: Option<&Rational>) -> Result<DimensionReport, AnalysisError> {
    if levels.len() < 3 {
        return Err(AnalysisError::InsufficientDepth(format!("{} levels, need at least 3", levels.len())));
    }
    if let Some(l) = levels
        .iter()
        .find(|l| l.gap.is_zero() || l.gap.cmp_rational(&Rational::new()) == Ordering::Less)
    {
        return Err(AnalysisError::InvalidInput(format!("non-positive gap at level {}", l.n)));
    }
    if let Some(l) = levels.iter().find(|l| l.count < 1 || l.branch < 1) {
        return Err(AnalysisError::InvalidInput(format!("empty level {}", l.n)));
    }
    let mut rows = Vec::with_capacity(levels.len());
    let mut running: Option<BigReal> = None;
    for l in levels {
        let gap_used = match running.take() {
            Some(prev) if prev <= l.gap => prev,
            _ => l.gap.clone(),
        };
        running = Some(gap_used.clone());
        let num = ln_integer(&l.count);
        let den = -(ln_integer(&l.branch) + Float::with_val(WORK_BITS, gap_used.as_float().ln_ref()));
        let raw = if den > 0 {
            Float::with_val(WORK_BITS, &num / &den).to_f64()
        } else {
            f64::INFINITY
        };
        let partial = raw.clamp(0.0, 1.0);
        let gap_scale = match (upper, &l.q) {
            (Some(u), Some(q)) => {
                let qf = Float::with_val(WORK_BITS, q);
                let lg = Float::with_val(WORK_BITS, l.gap.as_float().ln_ref())
                    + Float::with_val(WORK_BITS, qf.ln_ref())
                    + Float::with_val(WORK_BITS, &qf - 1u32) * Float::with_val(WORK_BITS, u).ln();
                Some(lg.exp().to_f64())
            }
            _ => None,
        };
        rows.push(DimensionRow {
            n: l.n,
            count: l.count.clone(),
            branch: l.branch.clone(),
            gap: l.gap.clone(),
            gap_substituted: gap_used != l.gap,
            gap_used,
            raw,
            partial,
            clamped: !(0.0..=1.0).contains(&raw),
            sampled: l.sampled,
            gap_scale,
        });
    }
    let tail = rows.len().div_ceil(3);
    let tail_min = rows[rows.len() - tail..].iter().map(|r| r.partial).fold(f64::INFINITY, f64::min);
    let qs: Vec<Option<Rational>> = levels[levels.len() - 3..].iter().map(|l| l.q.clone()).collect();
    let extrapolated = extrapolate(&rows[rows.len() - 3..], &qs);
    Ok(DimensionReport {
        gaps_substituted: rows.iter().any(|r| r.gap_substituted),
        rows,
        tail_min,
        extrapolated,
        closed_form: None,
        limit: None,
    })
}

/// Value at `t = 0` of the quadratic in `t = 1/x` through the last three rows.
fn extrapolate(rows: &[DimensionRow], qs: &[Option<Rational>]) -> f64 {
    if rows.iter().any(|r| !r.raw.is_finite()) {
        return rows[rows.len() - 1].partial;
    }
    let t: Vec<f64> = match qs {
        [Some(a), Some(b), Some(c)] => [a, b, c].iter().map(|q| 1.0 / q.to_f64()).collect(),
        _ => rows.iter().map(|r| 1.0 / r.n as f64).collect(),
    };
    (0..3)
        .map(|i| {
            let others = (0..3).filter(|&j| j != i);
            let w: f64 = others.map(|j| t[j] / (t[j] - t[i])).product();
            w * rows[i].raw
        })
        .sum()
}

pub fn falconer_bound(tree: &CantorTree) -> Result<DimensionReport, AnalysisError> {
    let upper = tree.config.upper();
    falconer_from_levels(&tree.dimension_levels(), Some(&upper))
}

fn check_params(lambda: &Rational, delta: &Rational) -> Result<(), AnalysisError> {
    if *lambda <= 1 || *delta <= 0 {
        return Err(AnalysisError::InvalidInput("need lambda > 1 and delta > 0".into()));
    }
    Ok(())
}

/// Enclosure of `η log λ / (η ε log λ + log(λ+δ))`.
pub fn closed_form_bound(lambda: &Rational, delta: &Rational, eps: &Rational, eta: &Rational, prec: u32) -> Result<RInterval, AnalysisError> {
    check_params(lambda, delta)?;
    if *eps <= 0 || *eta <= 0 || *eta > 1 {
        return Err(AnalysisError::InvalidInput("need eps > 0 and eta in (0, 1]".into()));
    }
    let ln_l = RInterval::from_rational(lambda, prec).ln(prec)?;
    let ln_u = RInterval::from_rational(&Rational::from(lambda + delta), prec).ln(prec)?;
    let eta_iv = RInterval::from_rational(eta, prec);
    let num = eta_iv.mul(&ln_l, prec);
    let den = num.mul(&RInterval::from_rational(eps, prec), prec).add(&ln_u, prec);
    Ok(num.div(&den, prec)?)
}

/// Enclosure of `log λ / log(λ+δ)`.
pub fn limit_bound(lambda: &Rational, delta: &Rational, prec: u32) -> Result<RInterval, AnalysisError> {
    check_params(lambda, delta)?;
    let ln_l = RInterval::from_rational(lambda, prec).ln(prec)?;
    let ln_u = RInterval::from_rational(&Rational::from(lambda + delta), prec).ln(prec)?;
    Ok(ln_l.div(&ln_u, prec)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxCountEstimate {
    /// `(scale, boxes needed)`
    pub counts: Vec<(BigReal, Integer)>,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Fewest boxes of side `s` covering the union of `leaves` (greedy left to
/// right, optimal in one dimension), for each scale, and the least-squares
/// slope of `log N(s)` against `log(1/s)`.
pub fn box_count(leaves: &[RInterval], scales: &[BigReal]) -> Result<BoxCountEstimate, AnalysisError> {
    if leaves.is_empty() {
        return Err(AnalysisError::InsufficientDepth("no leaf intervals".into()));
    }
    if scales.len() < 3 {
        return Err(AnalysisError::InsufficientDepth(format!("{} scales, need at least 3", scales.len())));
    }
    if scales.iter().any(|s| s.is_zero() || s.cmp_rational(&Rational::new()) == Ordering::Less) {
        return Err(AnalysisError::InvalidInput("scales must be positive".into()));
    }
    let smallest = scales.iter().cloned().reduce(BigReal::min).expect("non-empty");
    let largest = scales.iter().cloned().reduce(BigReal::max).expect("non-empty");
    let span = Float::with_val(WORK_BITS, largest.as_float() / smallest.as_float());
    if span < 100 {
        return Err(AnalysisError::InsufficientDepth("scales must span at least two decades".into()));
    }
    let mut sorted: Vec<&RInterval> = leaves.iter().collect();
    sorted.sort_by(|a, b| a.lo().partial_cmp(b.lo()).unwrap_or(Ordering::Equal));
    let prec = leaves.iter().map(RInterval::prec).max().unwrap_or(64).max(WORK_BITS) + 64;
    let counts: Vec<(BigReal, Integer)> = scales.iter().map(|s| (s.clone(), cover_count(&sorted, s.as_float(), prec))).collect();
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|(s, c)| {
            let x = -Float::with_val(WORK_BITS, s.as_float().ln_ref()).to_f64();
            let y = ln_integer(c).to_f64();
            (x, y)
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / k).sqrt();
    Ok(BoxCountEstimate { counts, slope, residual })
}

fn cover_count(sorted: &[&RInterval], s: &Float, prec: u32) -> Integer {
    let mut count = Integer::new();
    let mut covered: Option<Float> = None;
    for iv in sorted {
        let a = iv.lo().as_float();
        let b = iv.hi().as_float();
        let start = match &covered {
            Some(c) if b <= c => continue,
            Some(c) if a <= c => c.clone(),
            _ => Float::with_val(prec, a),
        };
        let len = Float::with_val_round(prec, b - &start, Round::Up).0;
        let k = Float::with_val_round(prec, &len / s, Round::Up).0;
        let mut k = k.to_integer_round(Round::Up).map(|(i, _)| i).unwrap_or_default();
        if k < 1 {
            k = Integer::from(1);
        }
        let reach = Float::with_val(prec, s * Float::with_val(prec, &k));
        covered = Some(Float::with_val(prec, &start + &reach));
        count += k;
    }
    count
}

/// Box counts on the deepest complete level of a tree.
pub fn box_count_tree(tree: &CantorTree, scales: &[BigReal]) -> Result<BoxCountEstimate, AnalysisError> {
    let level = tree
        .leaves()
        .ok_or_else(|| AnalysisError::InsufficientDepth("no complete level in the tree".into()))?;
    let leaves: Vec<RInterval> = level.nodes.iter().map(|n| n.hull()).collect();
    box_count(&leaves, scales)
}
