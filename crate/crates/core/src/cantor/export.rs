//! Plain-text tree export: one interval per line, `level label lo hi`,
//! preceded by `#` metadata lines.
//!
//! Exported endpoints are the outward hull of each exact interval, so gaps
//! measured from the file are lower bounds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rug::{Integer, Rational};

use super::certificate::digits_for;
use super::{CantorTree, ConstructError};
use crate::analysis::DimensionLevel;
use crate::precision::{format_rational, parse_rational, BigReal, RInterval, Rounding};

/// Per-level metadata of an export.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelMeta {
    pub total: Integer,
    pub branch: Integer,
    pub sampled: bool,
    pub q: Option<Rational>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeExport {
    /// `key=value` pairs from the `# config` line.
    pub config: BTreeMap<String, String>,
    pub levels: BTreeMap<usize, LevelMeta>,
    /// `(level, label, lo, hi)`
    pub intervals: Vec<(usize, Integer, Rational, Rational)>,
}

impl TreeExport {
    pub fn from_tree(tree: &CantorTree, densify_eps: Option<&Rational>) -> Self {
        let cfg = &tree.config;
        let mut config = BTreeMap::new();
        config.insert("lambda".to_string(), format_rational(&cfg.lambda));
        config.insert("delta".to_string(), format_rational(&cfg.delta));
        config.insert("eta".to_string(), format_rational(&cfg.eta));
        if let Some(e) = densify_eps {
            config.insert("eps".to_string(), format_rational(e));
        }
        let mut export = TreeExport { config, ..Default::default() };
        for level in &tree.levels {
            export.levels.insert(
                level.n,
                LevelMeta {
                    total: level.total.clone(),
                    branch: level.branch.clone(),
                    sampled: level.sampled,
                    q: Some(level.q.clone()),
                },
            );
            for node in &level.nodes {
                let hull = node.hull();
                let digits = digits_for(hull.prec());
                let (lo, hi) = hull.to_decimal_outward(digits);
                let lo = parse_rational(&lo).expect("printed decimal parses");
                let hi = parse_rational(&hi).expect("printed decimal parses");
                export.intervals.push((level.n, node.label.clone(), lo, hi));
            }
        }
        export
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# powmod tree export\n");
        if !self.config.is_empty() {
            let pairs: Vec<String> = self.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "# config {}", pairs.join(" "));
        }
        for (n, meta) in &self.levels {
            let _ = write!(
                out,
                "# level n={n} total={} branch={} sampled={}",
                meta.total,
                meta.branch,
                u8::from(meta.sampled)
            );
            if let Some(q) = &meta.q {
                let _ = write!(out, " q={}", format_rational(q));
            }
            out.push('\n');
        }
        for (n, h, lo, hi) in &self.intervals {
            let _ = writeln!(out, "{n} {h} {} {}", decimal(lo), decimal(hi));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ConstructError> {
        let mut export = TreeExport::default();
        for (i, line) in text.lines().enumerate() {
            let bad = |what: &str| ConstructError::Format(format!("line {}: {what}", i + 1));
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut words = rest.split_whitespace();
                match words.next() {
                    Some("config") => {
                        for w in words {
                            let (k, v) = w.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                            export.config.insert(k.to_string(), v.to_string());
                        }
                    }
                    Some("level") => {
                        let mut fields = BTreeMap::new();
                        for w in words {
                            let (k, v) = w.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                            fields.insert(k, v);
                        }
                        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
                        let n: usize = get("n")?.parse().map_err(|_| bad("bad level index"))?;
                        let meta = LevelMeta {
                            total: get("total")?.parse().map_err(|_| bad("bad total"))?,
                            branch: get("branch")?.parse().map_err(|_| bad("bad branch"))?,
                            sampled: get("sampled")? == "1",
                            q: fields.get("q").map(|v| parse_rational(v)).transpose().map_err(|_| bad("bad q"))?,
                        };
                        export.levels.insert(n, meta);
                    }
                    _ => {}
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(bad("expected 'level label lo hi'"));
            }
            let n: usize = parts[0].parse().map_err(|_| bad("bad level"))?;
            let h: Integer = parts[1].parse().map_err(|_| bad("bad label"))?;
            let lo = parse_rational(parts[2]).map_err(|_| bad("bad lo"))?;
            let hi = parse_rational(parts[3]).map_err(|_| bad("bad hi"))?;
            if lo > hi {
                return Err(bad("lo above hi"));
            }
            export.intervals.push((n, h, lo, hi));
        }
        Ok(export)
    }

    fn level_intervals(&self, n: usize) -> Vec<(&Rational, &Rational)> {
        let mut v: Vec<(&Rational, &Rational)> = self.intervals.iter().filter(|iv| iv.0 == n).map(|iv| (&iv.2, &iv.3)).collect();
        v.sort();
        v
    }

    fn level_indices(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.intervals.iter().map(|iv| iv.0).collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    /// Dimension inputs per level. Counts and branch numbers come from the
    /// metadata when present, otherwise from the stored intervals.
    pub fn dimension_levels(&self) -> Vec<DimensionLevel> {
        let ns = self.level_indices();
        let mut out = Vec::new();
        for (k, &n) in ns.iter().enumerate() {
            let ivs = self.level_intervals(n);
            let gap = ivs.windows(2).map(|w| Rational::from(w[1].0 - w[0].1)).min();
            let Some(gap) = gap else { continue };
            if gap <= 0 {
                continue;
            }
            let meta = self.levels.get(&n);
            let count = meta.map_or_else(|| Integer::from(ivs.len()), |m| m.total.clone());
            let branch = match meta {
                Some(m) => m.branch.clone(),
                None => match ns.get(k + 1) {
                    Some(&next) => Integer::from(self.level_intervals(next).len()) / Integer::from(ivs.len()).max(Integer::from(1)),
                    None => match k.checked_sub(1).map(|p| ns[p]) {
                        Some(prev) => Integer::from(ivs.len()) / Integer::from(self.level_intervals(prev).len()).max(Integer::from(1)),
                        None => Integer::from(1),
                    },
                },
            };
            out.push(DimensionLevel {
                n,
                count,
                branch,
                gap: BigReal::from_rational(&gap, 128, Rounding::Down),
                sampled: meta.is_some_and(|m| m.sampled),
                q: meta.and_then(|m| m.q.clone()),
            });
        }
        out
    }

    /// Intervals of the deepest level that is not sampled.
    pub fn leaves(&self, prec: u32) -> Option<Vec<RInterval>> {
        let n = self
            .level_indices()
            .into_iter()
            .rev()
            .find(|n| !self.levels.get(n).is_some_and(|m| m.sampled))?;
        Some(
            self.level_intervals(n)
                .into_iter()
                .map(|(lo, hi)| {
                    RInterval::new(BigReal::from_rational(lo, prec, Rounding::Down), BigReal::from_rational(hi, prec, Rounding::Up))
                        .expect("lo <= hi checked on parse")
                })
                .collect(),
        )
    }

    pub fn config_rational(&self, key: &str) -> Option<Rational> {
        self.config.get(key).and_then(|v| parse_rational(v).ok())
    }
}

/// Exact decimal of a rational read from or destined for an export; the
/// denominators involved are powers of two and five.
fn decimal(x: &Rational) -> String {
    format_rational(x)
}

pub fn write_tree_export(tree: &CantorTree, densify_eps: Option<&Rational>) -> String {
    TreeExport::from_tree(tree, densify_eps).to_text()
}

pub fn read_tree_export(text: &str) -> Result<TreeExport, ConstructError> {
    TreeExport::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_meta() {
        let text = "# powmod tree export\n# config lambda=2 delta=0.5\n# level n=1 total=2 branch=2 sampled=0\n1 0 0 0.25\n1 1 0.75 1\n";
        let e = TreeExport::parse(text).unwrap();
        assert_eq!(e.config_rational("lambda"), Some(Rational::from(2)));
        assert_eq!(e.intervals.len(), 2);
        let levels = e.dimension_levels();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[0].count, 2);
        assert_eq!(levels[0].gap.to_f64(), 0.5);
        assert_eq!(TreeExport::parse(&e.to_text()).unwrap(), e);
    }

    #[test]
    fn rejects_malformed_line() {
        assert!(TreeExport::parse("1 2 3\n").is_err());
        assert!(TreeExport::parse("1 2 0.5 0.25\n").is_err());
    }
}
