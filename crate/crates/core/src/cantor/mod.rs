//! Nested-interval construction.
//!
//! Level `n` intervals are `I_(n,h) = [(h+a_n)^(1/q_n), (h+b_n)^(1/q_n)]` with
//! `a_n = r_n − ε_n`, `b_n = r_n + ε_n`. Every point of `I_(n,h)` has
//! `x^(q_n)` within `ε_n` of `h + r_n`. A parent's children are the labels
//! whose intervals fit inside the image of the parent under
//! `t ↦ t^(q_(n+1)/q_n)`, minus the first and last.
//!
//! Constructed intervals are stored as inward-rounded certified subsets of
//! the exact interval, together with outward enclosures of both exact
//! endpoints.

mod certificate;
mod export;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use rug::rand::RandState;
use rug::{Integer, Rational};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, DimensionLevel};
use crate::precision::{BigReal, KernelError, PrecisionPolicy, RInterval, RationalPow, Rounding, DEFAULT_MAX_DOUBLINGS};
use crate::sequences::{DensifiedPair, EpsilonSchedule, SequenceSpec};

pub use certificate::{Certificate, LevelRecord};
pub use export::{read_tree_export, write_tree_export, LevelMeta, TreeExport};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConstructError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("depth {depth} needs {needed} exponents, only {available} available")]
    DepthTooLarge { depth: usize, needed: usize, available: usize },
    #[error("no start level satisfies the level conditions up to depth {depth}")]
    NoValidStart { depth: usize },
    #[error("level {level}, label {label}: image holds {available} integers, need {required}")]
    CountShortfall {
        level: usize,
        label: Integer,
        available: Integer,
        required: Integer,
    },
    #[error("level condition fails at level {level}")]
    ConditionViolated { level: usize },
    #[error("image interval too short at level {level}")]
    ImageTooShort { level: usize },
    #[error("interval at level {level} escapes its container")]
    ContainmentViolation { level: usize },
    #[error("precision exhausted at level {level} ({bits} bits)")]
    PrecisionExhausted { level: usize, bits: u32 },
    #[error("independent verification failed at level {level}")]
    VerificationFailed { level: usize },
    #[error("malformed certificate or export: {0}")]
    Format(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl ConstructError {
    fn at(level: usize) -> impl Fn(KernelError) -> ConstructError {
        move |e| match e {
            KernelError::PrecisionExhausted { bits } => ConstructError::PrecisionExhausted { level, bits },
            other => ConstructError::Kernel(other),
        }
    }
}

/// Which child to follow when descending.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchPolicy {
    Leftmost,
    Midmost,
    SeededRandom(u64),
}

impl FromStr for BranchPolicy {
    type Err = ConstructError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "leftmost" => Ok(BranchPolicy::Leftmost),
            None if s == "midmost" => Ok(BranchPolicy::Midmost),
            Some(("random", seed)) => seed
                .parse()
                .map(BranchPolicy::SeededRandom)
                .map_err(|_| ConstructError::InvalidConfig(format!("bad seed in {s:?}"))),
            _ => Err(ConstructError::InvalidConfig(format!("unknown branch policy {s:?}"))),
        }
    }
}

impl fmt::Display for BranchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchPolicy::Leftmost => write!(f, "leftmost"),
            BranchPolicy::Midmost => write!(f, "midmost"),
            BranchPolicy::SeededRandom(s) => write!(f, "random:{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionConfig {
    pub lambda: Rational,
    pub delta: Rational,
    pub eta: Rational,
    /// Deepest level (one-based index into the working sequence).
    pub depth: usize,
    pub branch: BranchPolicy,
    pub max_tree_nodes: usize,
    /// Overrides the scale-derived base precision.
    pub base_bits: Option<u32>,
    pub max_doublings: u32,
}

impl ConstructionConfig {
    pub fn new(lambda: Rational, delta: Rational, eta: Rational, depth: usize) -> Self {
        ConstructionConfig {
            lambda,
            delta,
            eta,
            depth,
            branch: BranchPolicy::Leftmost,
            max_tree_nodes: 100_000,
            base_bits: None,
            max_doublings: DEFAULT_MAX_DOUBLINGS,
        }
    }

    pub fn validate(&self) -> Result<(), ConstructError> {
        if self.lambda <= 1 {
            return Err(ConstructError::InvalidConfig("lambda must exceed 1".into()));
        }
        if self.delta <= 0 {
            return Err(ConstructError::InvalidConfig("delta must be positive".into()));
        }
        if self.eta <= 0 || self.eta >= 1 {
            return Err(ConstructError::InvalidConfig("eta must lie in (0, 1)".into()));
        }
        if self.depth < 1 {
            return Err(ConstructError::InvalidConfig("depth must be at least 1".into()));
        }
        if self.max_tree_nodes < 1 {
            return Err(ConstructError::InvalidConfig("max_tree_nodes must be positive".into()));
        }
        Ok(())
    }

    pub fn upper(&self) -> Rational {
        Rational::from(&self.lambda + &self.delta)
    }
}

/// Consecutive labels `first, first+1, …, first+count−1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelRange {
    pub first: Integer,
    pub count: Integer,
}

impl LabelRange {
    pub fn last(&self) -> Integer {
        Integer::from(&self.first + &self.count) - 1
    }

    pub fn nth(&self, k: &Integer) -> Integer {
        Integer::from(&self.first + k)
    }

    /// All labels, or `None` when there are more than `limit`.
    pub fn all(&self, limit: usize) -> Option<Vec<Integer>> {
        let count = self.count.to_usize().filter(|&c| c <= limit)?;
        Some((0..count).map(|k| Integer::from(&self.first + k)).collect())
    }

    /// The first `k` and last `k` labels (all of them if that covers the range).
    pub fn extremes(&self, k: usize) -> Vec<Integer> {
        if let Some(all) = self.all(2 * k) {
            return all;
        }
        let head = (0..k).map(|i| Integer::from(&self.first + i));
        let last = self.last();
        let tail = (0..k).rev().map(|i| Integer::from(&last - i));
        head.chain(tail).collect()
    }
}

/// One constructed interval.
#[derive(Clone, Debug, PartialEq)]
pub struct CantorInterval {
    pub level: usize,
    pub label: Integer,
    /// Outward enclosure of `(h+a_n)^(1/q_n)`.
    pub left: RInterval,
    /// Outward enclosure of `(h+b_n)^(1/q_n)`.
    pub right: RInterval,
    /// Inward-rounded subset of the exact interval.
    pub certified: RInterval,
    /// Position of the parent in the previous level.
    pub parent: Option<usize>,
}

impl CantorInterval {
    /// Outward enclosure of the exact interval.
    pub fn hull(&self) -> RInterval {
        RInterval::new(self.left.lo().clone(), self.right.hi().clone()).expect("left endpoint below right endpoint")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CantorLevel {
    pub n: usize,
    pub q: Rational,
    pub nodes: Vec<CantorInterval>,
    /// Number of intervals at this level in the full construction.
    pub total: Integer,
    /// Children per interval at the next level.
    pub branch: Integer,
    /// Lower bound on the smallest gap between consecutive stored intervals.
    pub min_gap: Option<BigReal>,
    /// True when only a subset of the level is stored.
    pub sampled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CantorTree {
    pub config: ConstructionConfig,
    pub start_level: usize,
    pub levels: Vec<CantorLevel>,
}

impl CantorTree {
    /// Per-level inputs to the dimension bound.
    ///
    /// Gaps measured on a sampled level are still the level minimum: the
    /// sample keeps the two rightmost intervals, and since `t ↦ t^(1/q)` is
    /// concave the gap between consecutive labels shrinks as the label grows.
    pub fn dimension_levels(&self) -> Vec<DimensionLevel> {
        self.levels
            .iter()
            .filter_map(|l| {
                l.min_gap.as_ref().map(|g| DimensionLevel {
                    n: l.n,
                    count: l.total.clone(),
                    branch: l.branch.clone(),
                    gap: g.clone(),
                    sampled: l.sampled,
                    q: Some(l.q.clone()),
                })
            })
            .collect()
    }

    pub fn leaves(&self) -> Option<&CantorLevel> {
        self.levels.iter().rev().find(|l| !l.sampled)
    }
}

/// Construction over a fixed working sequence and schedule.
pub struct Construction<'a> {
    cfg: &'a ConstructionConfig,
    dp: &'a DensifiedPair,
    es: &'a EpsilonSchedule,
    policy: PrecisionPolicy,
    branch: Vec<Integer>,
    holds: Vec<bool>,
}

impl<'a> Construction<'a> {
    pub fn new(cfg: &'a ConstructionConfig, dp: &'a DensifiedPair, es: &'a EpsilonSchedule) -> Result<Self, ConstructError> {
        cfg.validate()?;
        if dp.len() < cfg.depth + 1 {
            return Err(ConstructError::DepthTooLarge {
                depth: cfg.depth,
                needed: cfg.depth + 1,
                available: dp.len(),
            });
        }
        if es.len() < cfg.depth {
            return Err(ConstructError::InvalidConfig(format!(
                "schedule has {} entries, depth {} needs {}",
                es.len(),
                cfg.depth,
                cfg.depth
            )));
        }
        let policy = match cfg.base_bits {
            Some(bits) => PrecisionPolicy::new(bits, cfg.max_doublings),
            None => PrecisionPolicy::for_scale(dp.q_at(cfg.depth), &cfg.upper(), cfg.max_doublings),
        };
        let branch = (1..=cfg.depth)
            .into_par_iter()
            .map(|n| {
                let scaled = &cfg.eta * dp.gap_at(n);
                let p = PrecisionPolicy::for_scale(&scaled, &cfg.lambda, cfg.max_doublings);
                RationalPow::new(&cfg.lambda, &scaled).ceil(&p).map_err(ConstructError::at(n))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let holds = (1..=cfg.depth)
            .into_par_iter()
            .map(|n| {
                crate::sequences::condition_holds(&cfg.lambda, &cfg.eta, &dp.gap_at(n), es.at(n), cfg.max_doublings).map_err(|e| match e {
                    crate::sequences::SequenceError::Kernel(k) => ConstructError::at(n)(k),
                    other => ConstructError::InvalidConfig(other.to_string()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Construction {
            cfg,
            dp,
            es,
            policy,
            branch,
            holds,
        })
    }

    pub fn policy(&self) -> &PrecisionPolicy {
        &self.policy
    }

    /// `m_n = ⌈λ^(η (q_(n+1) − q_n))⌉`.
    pub fn branch_count(&self, n: usize) -> &Integer {
        &self.branch[n - 1]
    }

    /// Whether `2 ε_n λ^g ≥ m_n + 2` holds at level `n`.
    pub fn condition_at(&self, n: usize) -> bool {
        self.holds[n - 1]
    }

    fn side_conditions(&self, n: usize) -> bool {
        let (a, b) = self.es.window(self.dp, n);
        *self.es.at(n) < Rational::from((1, 2)) && a > -1 && b < 1
    }

    /// Whether `(λ+δ)^(q_n) − λ^(q_n) ≥ 4`.
    pub fn window_wide_enough(&self, n: usize) -> Result<bool, ConstructError> {
        let q = self.dp.q_at(n);
        let upper = self.cfg.upper();
        let mut bits = self.policy.base_bits;
        for prec in self.policy.ladder() {
            bits = prec;
            let hi = RationalPow::new(&upper, q).enclose(prec)?;
            let lo = RationalPow::new(&self.cfg.lambda, q).enclose(prec)?;
            let d = hi.sub(&lo, prec);
            if d.lo().cmp_rational(&Rational::from(4)) != Ordering::Less {
                return Ok(true);
            }
            if d.hi().cmp_rational(&Rational::from(4)) == Ordering::Less {
                return Ok(false);
            }
        }
        Err(ConstructError::PrecisionExhausted { level: n, bits })
    }

    /// Smallest `N` such that the level condition, `ε_n < 1/2` and
    /// `a_n, b_n ∈ (−1, 1)` hold for every `n` in `N..=depth` and the window
    /// `[λ^(q_N), (λ+δ)^(q_N)]` has length at least 4.
    pub fn find_start_level(&self) -> Result<usize, ConstructError> {
        let depth = self.cfg.depth;
        let mut from = depth + 1;
        for n in (1..=depth).rev() {
            if self.condition_at(n) && self.side_conditions(n) {
                from = n;
            } else {
                break;
            }
        }
        for n in from..=depth {
            if self.window_wide_enough(n)? {
                return Ok(n);
            }
        }
        Err(ConstructError::NoValidStart { depth })
    }

    /// Labels of the level-`n` roots: the integers in
    /// `[λ^(q_n), (λ+δ)^(q_n)]` minus the first and last.
    pub fn root_labels(&self, n: usize) -> Result<LabelRange, ConstructError> {
        let q = self.dp.q_at(n);
        let first = RationalPow::new(&self.cfg.lambda, q).ceil(&self.policy).map_err(ConstructError::at(n))?;
        let upper = self.cfg.upper();
        let last = RationalPow::new(&upper, q).floor(&self.policy).map_err(ConstructError::at(n))?;
        let count = Integer::from(&last - &first) - 1;
        if count < 2 {
            return Err(ConstructError::NoValidStart { depth: self.cfg.depth });
        }
        Ok(LabelRange { first: first + 1, count })
    }

    /// Certified interval `I_(n,h)`, checked against its container.
    pub fn interval(&self, n: usize, label: &Integer, parent: Option<(usize, &CantorInterval)>) -> Result<CantorInterval, ConstructError> {
        let (a, b) = self.es.window(self.dp, n);
        let left_base = Rational::from(label + &a);
        let right_base = Rational::from(label + &b);
        let inv = Rational::from(self.dp.q_at(n).recip_ref());
        let upper = self.cfg.upper();
        let mut bits = self.policy.base_bits;
        let mut escaped = false;
        for prec in self.policy.ladder() {
            bits = prec;
            let left = RationalPow::new(&left_base, &inv).enclose(prec)?;
            let right = RationalPow::new(&right_base, &inv).enclose(prec)?;
            let lo = left.hi().next_up();
            let hi = right.lo().next_down();
            if lo > hi {
                continue;
            }
            let certified = RInterval::new(lo, hi)?;
            let inside = match parent {
                Some((_, p)) => certified.is_subset_of(&p.certified),
                None => certified.lo().cmp_rational(&self.cfg.lambda) != Ordering::Less && certified.hi().cmp_rational(&upper) != Ordering::Greater,
            };
            if inside {
                return Ok(CantorInterval {
                    level: n,
                    label: label.clone(),
                    left,
                    right,
                    certified,
                    parent: parent.map(|(i, _)| i),
                });
            }
            escaped = true;
        }
        if escaped {
            Err(ConstructError::ContainmentViolation { level: n })
        } else {
            Err(ConstructError::PrecisionExhausted { level: n, bits })
        }
    }

    /// Children labels of `parent`: `j+1 … j+m_n` where `j` is the first
    /// integer in the image of the parent.
    pub fn child_labels(&self, parent: &CantorInterval) -> Result<LabelRange, ConstructError> {
        let n = parent.level;
        if n >= self.cfg.depth {
            return Err(ConstructError::InvalidConfig(format!("level {n} is already the deepest")));
        }
        if !self.condition_at(n) {
            return Err(ConstructError::ConditionViolated { level: n });
        }
        let (a, b) = self.es.window(self.dp, n);
        let left_base = Rational::from(&parent.label + &a);
        let right_base = Rational::from(&parent.label + &b);
        let ratio = Rational::from(self.dp.q_at(n + 1) / self.dp.q_at(n));
        let at = ConstructError::at(n);
        self.check_image_length(n, &left_base, &right_base, &ratio)?;
        let first = RationalPow::new(&left_base, &ratio).ceil(&self.policy).map_err(&at)?;
        let last = RationalPow::new(&right_base, &ratio).floor(&self.policy).map_err(&at)?;
        let available = Integer::from(&last - &first) + 1;
        let m = self.branch_count(n).clone();
        let required = Integer::from(&m + 2);
        if available < required {
            return Err(ConstructError::CountShortfall {
                level: n,
                label: parent.label.clone(),
                available,
                required,
            });
        }
        Ok(LabelRange { first: first + 1, count: m })
    }

    /// `(h+b)^ρ − (h+a)^ρ ≥ 2 ε_n λ^(q_(n+1) − q_n)`.
    fn check_image_length(&self, n: usize, left_base: &Rational, right_base: &Rational, ratio: &Rational) -> Result<(), ConstructError> {
        let gap = self.dp.gap_at(n);
        let two_eps = Rational::from(2 * self.es.at(n));
        let mut bits = self.policy.base_bits;
        for prec in PrecisionPolicy::new(128, self.policy.max_doublings + 4).ladder() {
            bits = prec;
            let lo = RationalPow::new(left_base, ratio).enclose(prec)?;
            let hi = RationalPow::new(right_base, ratio).enclose(prec)?;
            let length = hi.sub(&lo, prec);
            let need = RationalPow::new(&self.cfg.lambda, &gap)
                .enclose(prec)?
                .mul(&RInterval::from_rational(&two_eps, prec), prec);
            if length.lo() >= need.hi() {
                return Ok(());
            }
            if length.hi() < need.lo() {
                return Err(ConstructError::ImageTooShort { level: n });
            }
        }
        Err(ConstructError::PrecisionExhausted { level: n, bits })
    }

    /// Level `n` with every root interval.
    pub fn initial_level(&self, n: usize) -> Result<CantorLevel, ConstructError> {
        let roots = self.root_labels(n)?;
        let labels = roots
            .all(self.cfg.max_tree_nodes)
            .ok_or_else(|| ConstructError::InvalidConfig(format!("level {n} has {} roots, above max_tree_nodes", roots.count)))?;
        let nodes = labels.par_iter().map(|h| self.interval(n, h, None)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.make_level(n, nodes, roots.count, false))
    }

    /// Every child of every interval of `level`.
    pub fn refine_level(&self, level: &CantorLevel) -> Result<CantorLevel, ConstructError> {
        if level.sampled {
            return Err(ConstructError::InvalidConfig(format!("level {} is sampled", level.n)));
        }
        let budget = AtomicUsize::new(level.nodes.len());
        let nodes = self.children_of(level, &budget, None)?;
        let total = Integer::from(&level.total * self.branch_count(level.n));
        Ok(self.make_level(level.n + 1, nodes, total, false))
    }

    /// Children of the selected parents; `sample` keeps only the first and
    /// last `k` children of each.
    fn children_of(&self, level: &CantorLevel, used: &AtomicUsize, sample: Option<usize>) -> Result<Vec<CantorInterval>, ConstructError> {
        let n = level.n;
        let limit = self.cfg.max_tree_nodes;
        let per_parent = level
            .nodes
            .par_iter()
            .enumerate()
            .map(|(i, parent)| {
                let range = self.child_labels(parent)?;
                let labels = match sample {
                    Some(k) => range.extremes(k),
                    None => {
                        let labels = range
                            .all(limit)
                            .ok_or_else(|| ConstructError::InvalidConfig(format!("level {} exceeds max_tree_nodes", n + 1)))?;
                        let before = used.fetch_add(labels.len(), AtomicOrdering::SeqCst);
                        if before + labels.len() > limit {
                            return Err(ConstructError::InvalidConfig(format!("level {} exceeds max_tree_nodes", n + 1)));
                        }
                        labels
                    }
                };
                labels.iter().map(|h| self.interval(n + 1, h, Some((i, parent)))).collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(per_parent.into_iter().flatten().collect())
    }

    fn make_level(&self, n: usize, nodes: Vec<CantorInterval>, total: Integer, sampled: bool) -> CantorLevel {
        let min_gap = nodes
            .windows(2)
            .map(|w| {
                let prec = w[0].right.prec().max(w[1].left.prec());
                w[1].left.lo().sub(w[0].right.hi(), prec, Rounding::Down)
            })
            .reduce(BigReal::min);
        CantorLevel {
            n,
            q: self.dp.q_at(n).clone(),
            nodes,
            total,
            branch: self.branch_count(n).clone(),
            min_gap,
            sampled,
        }
    }

    fn pick(&self, range: &LabelRange, rng: &mut Option<RandState<'static>>) -> Integer {
        match (self.cfg.branch, rng.as_mut()) {
            (BranchPolicy::SeededRandom(_), Some(state)) => {
                let k = range.count.clone().random_below(state);
                range.nth(&k)
            }
            (BranchPolicy::Midmost, _) => range.nth(&(Integer::from(&range.count - 1) / 2)),
            _ => range.first.clone(),
        }
    }

    /// Follows the branch policy from level `N` down to `depth` and returns
    /// the deepest interval's certificate, re-verified independently.
    pub fn descend(&self) -> Result<Certificate, ConstructError> {
        let start = self.find_start_level()?;
        let mut rng = match self.cfg.branch {
            BranchPolicy::SeededRandom(seed) => {
                let mut state = RandState::new();
                state.seed(&Integer::from(seed));
                Some(state)
            }
            _ => None,
        };
        let roots = self.root_labels(start)?;
        let mut node = self.interval(start, &self.pick(&roots, &mut rng), None)?;
        let mut path = vec![node.clone()];
        for n in start..self.cfg.depth {
            let range = self.child_labels(&node)?;
            let label = self.pick(&range, &mut rng);
            node = self.interval(n + 1, &label, Some((0, &node)))?;
            path.push(node.clone());
        }
        let alpha = node.certified.clone();
        let thresholds = self.es.values();
        let report = analysis::verify(
            &alpha,
            self.dp.q(),
            self.dp.r(),
            Some(thresholds),
            start..=self.cfg.depth,
            self.cfg.max_doublings,
        )?;
        if let Some(row) = report.first_failure() {
            return Err(ConstructError::VerificationFailed { level: row.n });
        }
        let levels = path
            .into_iter()
            .zip(report.rows)
            .map(|(iv, row)| LevelRecord {
                n: iv.level,
                q: self.dp.q_at(iv.level).clone(),
                r: self.dp.r_at(iv.level).clone(),
                eps: self.es.at(iv.level).clone(),
                label: iv.label,
                left: iv.left,
                right: iv.right,
                certified: iv.certified,
                dist: row.dist,
            })
            .collect();
        Ok(Certificate {
            config: self.cfg.clone(),
            sequence: None,
            start_level: start,
            alpha,
            levels,
        })
    }

    /// Levels `N..=depth`, complete while the node budget allows. After
    /// that each level keeps the first and last parent and, for each, its
    /// first two and last two children; counts stay exact.
    pub fn enumerate_tree(&self) -> Result<CantorTree, ConstructError> {
        let start = self.find_start_level()?;
        let limit = self.cfg.max_tree_nodes;
        let roots = self.root_labels(start)?;
        let (labels, sampled) = match roots.all(limit) {
            Some(all) => (all, false),
            None => (roots.extremes(2), true),
        };
        let nodes = labels.par_iter().map(|h| self.interval(start, h, None)).collect::<Result<Vec<_>, _>>()?;
        let used = AtomicUsize::new(nodes.len());
        let mut levels = vec![self.make_level(start, nodes, roots.count.clone(), sampled)];
        for n in start..self.cfg.depth {
            let prev = levels.last().expect("at least the root level");
            let m = self.branch_count(n);
            let total = Integer::from(&prev.total * m);
            let full = !prev.sampled && Integer::from(m * prev.nodes.len()) + used.load(AtomicOrdering::SeqCst) <= limit;
            let next = if full {
                let nodes = self.children_of(prev, &used, None)?;
                self.make_level(n + 1, nodes, total, false)
            } else {
                let mut parents = prev.clone();
                if parents.nodes.len() > 2 {
                    let first = parents.nodes.first().cloned().expect("non-empty level");
                    let last = parents.nodes.last().cloned().expect("non-empty level");
                    parents.nodes = vec![first, last];
                }
                let mut nodes = self.children_of(&parents, &used, Some(2))?;
                // parent positions refer to the full previous level
                let map: Vec<usize> = if prev.nodes.len() > 2 {
                    vec![0, prev.nodes.len() - 1]
                } else {
                    (0..prev.nodes.len()).collect()
                };
                for node in &mut nodes {
                    node.parent = node.parent.map(|i| map[i]);
                }
                used.fetch_add(nodes.len(), AtomicOrdering::SeqCst);
                self.make_level(n + 1, nodes, total, true)
            };
            levels.push(next);
        }
        Ok(CantorTree {
            config: self.cfg.clone(),
            start_level: start,
            levels,
        })
    }
}

/// Builds the working sequence from `spec` and descends.
pub fn construct(cfg: &ConstructionConfig, spec: &SequenceSpec) -> Result<Certificate, ConstructError> {
    let (_, dp, es) = spec.build().map_err(|e| ConstructError::InvalidConfig(e.to_string()))?;
    let mut cert = Construction::new(cfg, &dp, &es)?.descend()?;
    cert.sequence = Some(spec.clone());
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{default_schedule, SequencePair};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn squares(count: i64, r: Rational) -> DensifiedPair {
        let qs: Vec<Rational> = (1..=count).map(|n| q(n * n, 1)).collect();
        DensifiedPair::identity(&SequencePair::new(qs, vec![r; count as usize]).unwrap())
    }

    #[test]
    fn start_level_for_squares_base_three() {
        let dp = squares(21, Rational::new());
        let es = default_schedule(&dp);
        let cfg = ConstructionConfig::new(q(3, 1), q(1, 1), q(1, 2), 20);
        let c = Construction::new(&cfg, &dp, &es).unwrap();
        // window at n=1 is [3, 4]: too short; at n=2 it is [81, 256]
        assert!(!c.window_wide_enough(1).unwrap());
        assert!(c.window_wide_enough(2).unwrap());
        assert_eq!(c.find_start_level().unwrap(), 2);
    }

    #[test]
    fn root_count_for_base_two_exponent_four() {
        // integers 16..=81 in [2^4, 3^4]; drop first and last
        let qs = vec![q(1, 1), q(4, 1), q(9, 1)];
        let dp = DensifiedPair::identity(&SequencePair::new(qs, vec![Rational::new(); 3]).unwrap());
        let es = default_schedule(&dp);
        let cfg = ConstructionConfig::new(q(2, 1), q(1, 1), q(1, 2), 2);
        let c = Construction::new(&cfg, &dp, &es).unwrap();
        let roots = c.root_labels(2).unwrap();
        assert_eq!(roots.first, 17);
        assert_eq!(roots.count, 64);
        let level = c.initial_level(2).unwrap();
        assert_eq!(level.nodes.len(), 64);
        for iv in &level.nodes {
            // endpoints raised back to q lie in [h+a, h+b]
            let prec = iv.left.prec() + 64;
            let four = RInterval::from_integer(&Integer::from(4), prec);
            let back = iv.certified.pow(&four, prec, crate::precision::Mode::Outward).unwrap();
            let (a, b) = es.window(&dp, 2);
            assert!(back.lo().cmp_rational(&Rational::from(&iv.label + &a)) != Ordering::Less);
            assert!(back.hi().cmp_rational(&Rational::from(&iv.label + &b)) != Ordering::Greater);
        }
    }

    #[test]
    fn branch_count_formula() {
        // gap 21 with eta 1/2: ceil(2^10.5) = 1449
        let qs = vec![q(1, 1), q(22, 1)];
        let dp = DensifiedPair::identity(&SequencePair::new(qs, vec![Rational::new(); 2]).unwrap());
        let es = default_schedule(&dp);
        let cfg = ConstructionConfig::new(q(2, 1), q(1, 1), q(1, 2), 1);
        let c = Construction::new(&cfg, &dp, &es).unwrap();
        assert_eq!(*c.branch_count(1), 1449);
    }

    #[test]
    fn label_range_extremes() {
        let r = LabelRange {
            first: Integer::from(10),
            count: Integer::from(100),
        };
        assert_eq!(r.extremes(2), vec![10, 11, 108, 109]);
        let r = LabelRange {
            first: Integer::from(10),
            count: Integer::from(3),
        };
        assert_eq!(r.extremes(2), vec![10, 11, 12]);
        assert_eq!(r.last(), 12);
    }

    #[test]
    fn branch_policy_round_trip() {
        for s in ["leftmost", "midmost", "random:42"] {
            assert_eq!(s.parse::<BranchPolicy>().unwrap().to_string(), s);
        }
        assert!("random:x".parse::<BranchPolicy>().is_err());
    }
}
