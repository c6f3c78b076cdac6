//! Exponent/target sequences and the densification step.
//!
//! All values are exact rationals. A [`SequencePair`] is the user-facing
//! `(q_n, r_n)`; [`densify`] inserts arithmetic runs so that consecutive
//! exponents grow by at most a factor `1 + ε`, and [`DensifiedPair`] is the
//! working sequence every later stage consumes. Positions in the vectors are
//! zero-based; level indices `n` reported to users are one-based.

mod file;
mod schedule;

use std::fmt;
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Integer, Rational};
use thiserror::Error;

use crate::precision::{format_rational, parse_rational, KernelError};

pub use file::{read_sequence_file, write_sequence_file};
pub use schedule::{condition_holds, default_schedule, validate_schedule, EpsilonSchedule, ScheduleCheck, ScheduleKind};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SequenceError {
    #[error("exponents must be strictly increasing (position {index})")]
    NotIncreasing { index: usize },
    #[error("first exponent must be positive")]
    NonPositive,
    #[error("q and r have different lengths ({q} vs {r})")]
    LengthMismatch { q: usize, r: usize },
    #[error("sequence needs at least {needed} terms, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("gaps q_(n+1) - q_n do not look divergent on the generated prefix ({detail})")]
    GapConditionSuspect { detail: String },
    #[error("no insertion count m fits the gap after index {index}")]
    InsertionInfeasible { index: usize },
    #[error("densification parameter must be positive")]
    BadEpsilon,
    #[error("schedule has {got} entries, expected {expected}")]
    ScheduleLength { expected: usize, got: usize },
    #[error("schedule entry at n={n} is not positive")]
    NonPositiveSchedule { n: usize },
    #[error("level condition never holds on the provided prefix")]
    NoValidIndex,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown family or target {0:?}")]
    UnknownDescriptor(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Built-in exponent families, or a file.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `q_n = n²`
    Squares,
    /// `q_n = n^k`
    Power(u32),
    /// `q_n = a·n² + b`
    Affine {
        a: Rational,
        b: Rational,
    },
    /// `q_n = n` (gaps do not diverge; verification only)
    Linear,
    /// `q_n = b^n`
    Geometric(u32),
    File(String),
}

impl FromStr for Family {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SequenceError::UnknownDescriptor(s.to_string());
        let mut parts = s.splitn(2, ':');
        let head = parts.next().unwrap_or("");
        let rest = parts.next();
        match (head, rest) {
            ("nsq", None) => Ok(Family::Squares),
            ("lin", None) => Ok(Family::Linear),
            ("pow", Some(k)) => {
                let k: u32 = k.parse().map_err(|_| unknown())?;
                if k < 1 {
                    return Err(unknown());
                }
                Ok(Family::Power(k))
            }
            ("geom", Some(b)) => {
                let b: u32 = b.parse().map_err(|_| unknown())?;
                if b < 2 {
                    return Err(unknown());
                }
                Ok(Family::Geometric(b))
            }
            ("affine", Some(ab)) => {
                let (a, b) = ab.split_once(':').ok_or_else(unknown)?;
                let a = parse_rational(a).map_err(|_| unknown())?;
                let b = parse_rational(b).map_err(|_| unknown())?;
                if a <= 0 {
                    return Err(unknown());
                }
                Ok(Family::Affine { a, b })
            }
            ("file", Some(path)) if !path.is_empty() => Ok(Family::File(path.to_string())),
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Squares => write!(f, "nsq"),
            Family::Linear => write!(f, "lin"),
            Family::Power(k) => write!(f, "pow:{k}"),
            Family::Geometric(b) => write!(f, "geom:{b}"),
            Family::Affine { a, b } => write!(f, "affine:{}:{}", format_rational(a), format_rational(b)),
            Family::File(p) => write!(f, "file:{p}"),
        }
    }
}

/// Target sequence `r_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Zero,
    Const(Rational),
    /// Second column of the sequence file.
    File,
}

impl FromStr for Target {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "zero" => Ok(Target::Zero),
            None if s == "file" => Ok(Target::File),
            Some(("const", v)) => parse_rational(v)
                .map(Target::Const)
                .map_err(|_| SequenceError::UnknownDescriptor(s.to_string())),
            _ => Err(SequenceError::UnknownDescriptor(s.to_string())),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Zero => write!(f, "zero"),
            Target::Const(c) => write!(f, "const:{}", format_rational(c)),
            Target::File => write!(f, "file"),
        }
    }
}

/// How strictly to treat a prefix whose gaps do not look divergent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapCheck {
    Strict,
    Lenient,
}

/// Values inserted as targets for new exponents.
#[derive(Clone, Debug, PartialEq)]
pub enum FillPolicy {
    Zero,
    Constant(Rational),
    /// Target of the next original term.
    CopyNext,
}

impl FromStr for FillPolicy {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "zero" => Ok(FillPolicy::Zero),
            None if s == "copy-next" => Ok(FillPolicy::CopyNext),
            Some(("const", v)) => parse_rational(v)
                .map(|c| FillPolicy::Constant(reduce_target(&c)))
                .map_err(|_| SequenceError::UnknownDescriptor(s.to_string())),
            _ => Err(SequenceError::UnknownDescriptor(s.to_string())),
        }
    }
}

impl fmt::Display for FillPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FillPolicy::Zero => write!(f, "zero"),
            FillPolicy::Constant(c) => write!(f, "const:{}", format_rational(c)),
            FillPolicy::CopyNext => write!(f, "copy-next"),
        }
    }
}

/// Reduces `r` into `[-1/2, 1/2)` by subtracting the nearest integer.
pub fn reduce_target(r: &Rational) -> Rational {
    let shifted = r + Rational::from((1, 2));
    let k = Integer::from(shifted.floor_ref());
    Rational::from(r - k)
}

/// Exponents `q_n` with targets `r_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequencePair {
    q: Vec<Rational>,
    r: Vec<Rational>,
}

impl SequencePair {
    /// Validates `q` and reduces every target into `[-1/2, 1/2)`.
    pub fn new(q: Vec<Rational>, r: Vec<Rational>) -> Result<Self, SequenceError> {
        if q.len() != r.len() {
            return Err(SequenceError::LengthMismatch { q: q.len(), r: r.len() });
        }
        check_increasing(&q)?;
        let r = r.iter().map(reduce_target).collect();
        Ok(SequencePair { q, r })
    }

    pub fn q(&self) -> &[Rational] {
        &self.q
    }

    pub fn r(&self) -> &[Rational] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Checks that gaps look divergent: the last gap exceeds the first and
    /// gaps never shrink over the tail half.
    pub fn check_gap_growth(&self) -> Result<(), SequenceError> {
        if self.q.len() < 3 {
            return Ok(());
        }
        let gaps: Vec<Rational> = self.q.windows(2).map(|w| Rational::from(&w[1] - &w[0])).collect();
        let first = &gaps[0];
        let last = &gaps[gaps.len() - 1];
        if last <= first {
            return Err(SequenceError::GapConditionSuspect {
                detail: format!("last gap {} <= first gap {}", format_rational(last), format_rational(first)),
            });
        }
        let tail = &gaps[gaps.len() / 2..];
        if let Some(i) = tail.windows(2).position(|w| w[1] < w[0]) {
            return Err(SequenceError::GapConditionSuspect {
                detail: format!("gap shrinks at position {}", gaps.len() / 2 + i + 1),
            });
        }
        Ok(())
    }
}

fn check_increasing(q: &[Rational]) -> Result<(), SequenceError> {
    if let Some(first) = q.first() {
        if *first <= 0 {
            return Err(SequenceError::NonPositive);
        }
    }
    if let Some(i) = q.windows(2).position(|w| w[1] <= w[0]) {
        return Err(SequenceError::NotIncreasing { index: i + 1 });
    }
    Ok(())
}

/// Generates `count` terms of a family with the given targets.
pub fn gen_exponents(family: &Family, target: &Target, count: usize, gap_check: GapCheck) -> Result<SequencePair, SequenceError> {
    if count == 0 {
        return Err(SequenceError::TooShort { needed: 1, got: 0 });
    }
    let (q, file_r) = match family {
        Family::File(path) => {
            let (mut q, mut r) = read_sequence_file(path)?;
            if q.len() < count {
                return Err(SequenceError::TooShort { needed: count, got: q.len() });
            }
            q.truncate(count);
            r.truncate(count);
            (q, Some(r))
        }
        _ => {
            let q = (1..=count as u32)
                .map(|n| {
                    let n = Integer::from(n);
                    match family {
                        Family::Squares => Rational::from(n.clone() * &n),
                        Family::Power(k) => Rational::from(n.pow(*k)),
                        Family::Affine { a, b } => (a * Rational::from(n.clone() * &n)) + b,
                        Family::Linear => Rational::from(n),
                        Family::Geometric(b) => Rational::from(Integer::from(*b).pow(n.to_u32().unwrap_or(0))),
                        Family::File(_) => unreachable!(),
                    }
                })
                .collect();
            (q, None)
        }
    };
    let r = match target {
        Target::Zero => vec![Rational::new(); count],
        Target::Const(c) => vec![c.clone(); count],
        Target::File => file_r.ok_or_else(|| SequenceError::InvalidParameter("target 'file' needs a file family".into()))?,
    };
    let sp = SequencePair::new(q, r)?;
    if gap_check == GapCheck::Strict {
        sp.check_gap_growth()?;
    }
    Ok(sp)
}

/// Working sequence `(q̃_n, r̃_n)` with the position of every original term.
#[derive(Clone, Debug, PartialEq)]
pub struct DensifiedPair {
    q: Vec<Rational>,
    r: Vec<Rational>,
    eps: Option<Rational>,
    origin: Vec<usize>,
}

impl DensifiedPair {
    /// The original sequence used as-is (no densification).
    pub fn identity(sp: &SequencePair) -> Self {
        DensifiedPair {
            q: sp.q.clone(),
            r: sp.r.clone(),
            eps: None,
            origin: (0..sp.len()).collect(),
        }
    }

    pub fn q(&self) -> &[Rational] {
        &self.q
    }

    pub fn r(&self) -> &[Rational] {
        &self.r
    }

    pub fn eps(&self) -> Option<&Rational> {
        self.eps.as_ref()
    }

    /// `origin_map()[i]` is the position of original term `i`.
    pub fn origin_map(&self) -> &[usize] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Exponent at one-based level `n`.
    pub fn q_at(&self, n: usize) -> &Rational {
        &self.q[n - 1]
    }

    pub fn r_at(&self, n: usize) -> &Rational {
        &self.r[n - 1]
    }

    /// `q̃_(n+1) − q̃_n`.
    pub fn gap_at(&self, n: usize) -> Rational {
        Rational::from(&self.q[n] - &self.q[n - 1])
    }

    /// Original `(q, r)` recovered from the origin positions.
    pub fn extract_original(&self) -> SequencePair {
        SequencePair {
            q: self.origin.iter().map(|&i| self.q[i].clone()).collect(),
            r: self.origin.iter().map(|&i| self.r[i].clone()).collect(),
        }
    }

    /// Whether `q̃_(i+1) <= (1+ε) q̃_i` holds at every position.
    pub fn ratio_bound_holds(&self, eps: &Rational) -> bool {
        let factor = Rational::from(1 + eps);
        self.q.windows(2).all(|w| w[1] <= Rational::from(&factor * &w[0]))
    }
}

/// Inserts terms `q_N + j·ε·q_N/2` between every pair with
/// `q_(N+1) > (1+ε) q_N`, where `j = 1..m` and `m` is the smallest count
/// landing in `[q_(N+1) − ε q_N, q_(N+1)]`.
pub fn densify(sp: &SequencePair, eps: &Rational, fill: &FillPolicy) -> Result<DensifiedPair, SequenceError> {
    if *eps <= 0 {
        return Err(SequenceError::BadEpsilon);
    }
    let Some(first) = sp.q.first() else {
        return Err(SequenceError::TooShort { needed: 1, got: 0 });
    };
    let factor = Rational::from(1 + eps);
    let mut q = vec![first.clone()];
    let mut r = vec![sp.r[0].clone()];
    let mut origin = vec![0];
    for i in 0..sp.len() - 1 {
        let lo = &sp.q[i];
        let hi = &sp.q[i + 1];
        if *hi > Rational::from(&factor * lo) {
            let step = Rational::from(eps * lo) / 2;
            let window_lo = hi - Rational::from(eps * lo);
            // smallest m with lo + m·step >= window_lo
            let ratio: Rational = Rational::from(&window_lo - lo) / &step;
            let m = Integer::from(ratio.ceil_ref()).max(Integer::from(1));
            let last = lo + Rational::from(&step * &m);
            if last < window_lo || last > *hi {
                return Err(SequenceError::InsertionInfeasible { index: i + 1 });
            }
            let fill_value = match fill {
                FillPolicy::Zero => Rational::new(),
                FillPolicy::Constant(c) => reduce_target(c),
                FillPolicy::CopyNext => sp.r[i + 1].clone(),
            };
            let m = m.to_usize().ok_or(SequenceError::InsertionInfeasible { index: i + 1 })?;
            for j in 1..=m {
                q.push(lo + Rational::from(&step * Integer::from(j)));
                r.push(fill_value.clone());
            }
        }
        q.push(hi.clone());
        r.push(sp.r[i + 1].clone());
        origin.push(q.len() - 1);
    }
    let dp = DensifiedPair {
        q,
        r,
        eps: Some(eps.clone()),
        origin,
    };
    if !dp.ratio_bound_holds(eps) {
        let index = dp.q.windows(2).position(|w| w[1] > Rational::from(&factor * &w[0])).unwrap_or(0);
        return Err(SequenceError::InsertionInfeasible { index: index + 1 });
    }
    Ok(dp)
}

/// Everything needed to regenerate a working sequence and its schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub family: Family,
    pub target: Target,
    /// Number of original terms generated.
    pub count: usize,
    /// Densification parameter; `None` keeps the sequence as-is.
    pub densify: Option<Rational>,
    pub fill: FillPolicy,
    pub schedule: ScheduleKind,
    pub gap_check: GapCheck,
}

impl SequenceSpec {
    pub fn new(family: Family, target: Target, count: usize) -> Self {
        SequenceSpec {
            family,
            target,
            count,
            densify: None,
            fill: FillPolicy::Zero,
            schedule: ScheduleKind::Default,
            gap_check: GapCheck::Strict,
        }
    }

    pub fn original(&self) -> Result<SequencePair, SequenceError> {
        gen_exponents(&self.family, &self.target, self.count, self.gap_check)
    }

    /// Working sequence and its schedule.
    pub fn build(&self) -> Result<(SequencePair, DensifiedPair, EpsilonSchedule), SequenceError> {
        let sp = self.original()?;
        let dp = match &self.densify {
            Some(eps) => densify(&sp, eps, &self.fill)?,
            None => DensifiedPair::identity(&sp),
        };
        let es = EpsilonSchedule::build(&self.schedule, &dp)?;
        Ok((sp, dp, es))
    }
}
