use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use super::{BranchPolicy, ConstructError, ConstructionConfig};
use crate::analysis::{self, Term, VerificationReport};
use crate::precision::{format_rational, parse_rational, CertifiedDecimal, RInterval};
use crate::sequences::SequenceSpec;

const FORMAT: &str = "powmod-certificate-1";

/// One level of a descended branch.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub n: usize,
    pub q: Rational,
    pub r: Rational,
    pub eps: Rational,
    pub label: Integer,
    pub left: RInterval,
    pub right: RInterval,
    pub certified: RInterval,
    /// Outward enclosure of `‖α^(q_n) − r_n‖` over the final α enclosure.
    pub dist: RInterval,
}

/// A certified member of the construction with its per-level evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub config: ConstructionConfig,
    pub sequence: Option<SequenceSpec>,
    pub start_level: usize,
    pub alpha: RInterval,
    pub levels: Vec<LevelRecord>,
}

impl Certificate {
    pub fn precision_bits(&self) -> u32 {
        self.alpha.prec()
    }

    pub fn alpha_decimal(&self, max_digits: u32) -> CertifiedDecimal {
        self.alpha.to_certified_decimal(max_digits)
    }

    pub fn depth(&self) -> usize {
        self.levels.last().map_or(self.start_level, |l| l.n)
    }

    /// Recomputes every recorded level from the α enclosure alone.
    pub fn reverify(&self, max_doublings: u32) -> Result<VerificationReport, analysis::AnalysisError> {
        let terms: Vec<Term> = self
            .levels
            .iter()
            .map(|l| Term {
                n: l.n,
                q: &l.q,
                r: &l.r,
                threshold: Some(&l.eps),
            })
            .collect();
        analysis::verify_terms(&self.alpha, &terms, max_doublings)
    }

    /// TOML document; α is written with `alpha_digits` certified digits.
    pub fn to_toml(&self, alpha_digits: u32) -> String {
        let doc = CertificateDoc {
            format: FORMAT.to_string(),
            start_level: self.start_level,
            precision_bits: self.precision_bits(),
            config: ConfigDoc::from(&self.config),
            sequence: self.sequence.as_ref().map(SequenceDoc::from),
            alpha: {
                let (lo, hi) = self.alpha.to_decimal_inward(digits_for(self.alpha.prec()));
                let d = self.alpha_decimal(alpha_digits);
                AlphaDoc {
                    lo,
                    hi,
                    decimal: d.text,
                    digits: d.digits,
                }
            },
            level: self.levels.iter().map(LevelDoc::from).collect(),
        };
        toml::to_string(&doc).expect("certificate fields are plain strings and integers")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConstructError> {
        let doc: CertificateDoc = toml::from_str(text).map_err(|e| ConstructError::Format(e.to_string()))?;
        if doc.format != FORMAT {
            return Err(ConstructError::Format(format!("unknown format {:?}", doc.format)));
        }
        let alpha = read_interval(&doc.alpha.lo, &doc.alpha.hi, doc.precision_bits)?;
        let levels = doc.level.iter().map(LevelDoc::to_record).collect::<Result<Vec<_>, _>>()?;
        Ok(Certificate {
            config: doc.config.to_config()?,
            sequence: doc.sequence.as_ref().map(SequenceDoc::to_spec).transpose()?,
            start_level: doc.start_level,
            alpha,
            levels,
        })
    }
}

/// Decimal digits that resolve `prec` binary digits.
pub(crate) fn digits_for(prec: u32) -> u32 {
    (f64::from(prec) * std::f64::consts::LOG10_2).ceil() as u32 + 3
}

fn read_interval(lo: &str, hi: &str, prec: u32) -> Result<RInterval, ConstructError> {
    RInterval::parse_outward(lo, hi, prec).map_err(|e| ConstructError::Format(e.to_string()))
}

fn read_rational(s: &str) -> Result<Rational, ConstructError> {
    parse_rational(s).map_err(|e| ConstructError::Format(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    format: String,
    start_level: usize,
    precision_bits: u32,
    config: ConfigDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence: Option<SequenceDoc>,
    alpha: AlphaDoc,
    level: Vec<LevelDoc>,
}

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    lambda: String,
    delta: String,
    eta: String,
    depth: usize,
    branch: String,
    max_tree_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    base_bits: Option<u32>,
    max_doublings: u32,
}

impl From<&ConstructionConfig> for ConfigDoc {
    fn from(c: &ConstructionConfig) -> Self {
        ConfigDoc {
            lambda: format_rational(&c.lambda),
            delta: format_rational(&c.delta),
            eta: format_rational(&c.eta),
            depth: c.depth,
            branch: c.branch.to_string(),
            max_tree_nodes: c.max_tree_nodes,
            base_bits: c.base_bits,
            max_doublings: c.max_doublings,
        }
    }
}

impl ConfigDoc {
    fn to_config(&self) -> Result<ConstructionConfig, ConstructError> {
        let mut c = ConstructionConfig::new(read_rational(&self.lambda)?, read_rational(&self.delta)?, read_rational(&self.eta)?, self.depth);
        c.branch = self.branch.parse::<BranchPolicy>()?;
        c.max_tree_nodes = self.max_tree_nodes;
        c.base_bits = self.base_bits;
        c.max_doublings = self.max_doublings;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct SequenceDoc {
    family: String,
    target: String,
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    densify: Option<String>,
    fill: String,
    schedule: String,
    strict_gaps: bool,
}

impl From<&SequenceSpec> for SequenceDoc {
    fn from(s: &SequenceSpec) -> Self {
        SequenceDoc {
            family: s.family.to_string(),
            target: s.target.to_string(),
            count: s.count,
            densify: s.densify.as_ref().map(format_rational),
            fill: s.fill.to_string(),
            schedule: s.schedule.to_string(),
            strict_gaps: s.gap_check == crate::sequences::GapCheck::Strict,
        }
    }
}

impl SequenceDoc {
    fn to_spec(&self) -> Result<SequenceSpec, ConstructError> {
        let bad = |e: crate::sequences::SequenceError| ConstructError::Format(e.to_string());
        let mut s = SequenceSpec::new(self.family.parse().map_err(bad)?, self.target.parse().map_err(bad)?, self.count);
        s.densify = self.densify.as_deref().map(read_rational).transpose()?;
        s.fill = self.fill.parse().map_err(bad)?;
        s.schedule = self.schedule.parse().map_err(bad)?;
        s.gap_check = if self.strict_gaps {
            crate::sequences::GapCheck::Strict
        } else {
            crate::sequences::GapCheck::Lenient
        };
        Ok(s)
    }
}

#[derive(Serialize, Deserialize)]
struct AlphaDoc {
    /// Inward-rounded endpoints of the certified enclosure.
    lo: String,
    hi: String,
    decimal: String,
    digits: u32,
}

#[derive(Serialize, Deserialize)]
struct LevelDoc {
    n: usize,
    q: String,
    r: String,
    eps: String,
    label: String,
    prec: u32,
    lo: String,
    hi: String,
    left_lo: String,
    left_hi: String,
    right_lo: String,
    right_hi: String,
    dist_lo: String,
    dist_hi: String,
}

impl From<&LevelRecord> for LevelDoc {
    fn from(l: &LevelRecord) -> Self {
        let prec = l.certified.prec().max(l.left.prec()).max(l.right.prec());
        let digits = digits_for(prec);
        let (lo, hi) = l.certified.to_decimal_inward(digits);
        let (left_lo, left_hi) = l.left.to_decimal_outward(digits);
        let (right_lo, right_hi) = l.right.to_decimal_outward(digits);
        let (dist_lo, dist_hi) = l.dist.to_decimal_outward(20);
        LevelDoc {
            n: l.n,
            q: format_rational(&l.q),
            r: format_rational(&l.r),
            eps: format_rational(&l.eps),
            label: l.label.to_string(),
            prec,
            lo,
            hi,
            left_lo,
            left_hi,
            right_lo,
            right_hi,
            dist_lo,
            dist_hi,
        }
    }
}

impl LevelDoc {
    fn to_record(&self) -> Result<LevelRecord, ConstructError> {
        Ok(LevelRecord {
            n: self.n,
            q: read_rational(&self.q)?,
            r: read_rational(&self.r)?,
            eps: read_rational(&self.eps)?,
            label: self
                .label
                .parse()
                .map_err(|_| ConstructError::Format(format!("bad label at level {}", self.n)))?,
            left: read_interval(&self.left_lo, &self.left_hi, self.prec)?,
            right: read_interval(&self.right_lo, &self.right_hi, self.prec)?,
            certified: read_interval(&self.lo, &self.hi, self.prec)?,
            dist: read_interval(&self.dist_lo, &self.dist_hi, 128)?,
        })
    }
}
