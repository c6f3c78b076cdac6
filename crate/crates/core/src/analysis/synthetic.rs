//! Synthetic Cantor data with known dimension.

use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Integer, Rational};

use super::DimensionLevel;
use crate::cantor::{LevelMeta, TreeExport};
use crate::precision::{parse_rational, BigReal, RInterval, Rounding};

/// `count = 2^n`, `m_n = 2`, `γ_n = 3^−(n+1)` for `n = 1..=levels`.
pub fn middle_third_levels(levels: usize) -> Vec<DimensionLevel> {
    binary_levels(levels, |n| Rational::from((Integer::from(1), Integer::from(3).pow(n + 1))))
}

/// `count = 2^n`, `m_n = 2`, `γ_n = base^−n`.
pub fn geometric_levels(levels: usize, base: u32) -> Vec<DimensionLevel> {
    binary_levels(levels, |n| Rational::from((Integer::from(1), Integer::from(base).pow(n))))
}

fn binary_levels(levels: usize, gap: impl Fn(u32) -> Rational) -> Vec<DimensionLevel> {
    (1..=levels as u32)
        .map(|n| DimensionLevel {
            n: n as usize,
            count: Integer::from(1) << n,
            branch: Integer::from(2),
            gap: BigReal::from_rational(&gap(n), 128, Rounding::Down),
            sampled: false,
            q: None,
        })
        .collect()
}

/// Exact middle-third intervals at levels `0..=depth`.
pub fn middle_third_intervals(depth: usize) -> Vec<Vec<(Rational, Rational)>> {
    let mut levels = vec![vec![(Rational::new(), Rational::from(1))]];
    for _ in 0..depth {
        let prev = levels.last().expect("level 0 present");
        let next = prev
            .iter()
            .flat_map(|(a, b)| {
                let third = Rational::from(b - a) / 3;
                [(a.clone(), Rational::from(a + &third)), (Rational::from(b - &third), b.clone())]
            })
            .collect();
        levels.push(next);
    }
    levels
}

/// Outward enclosures of the level-`depth` middle-third intervals.
pub fn middle_third_leaves(depth: usize, prec: u32) -> Vec<RInterval> {
    middle_third_intervals(depth)
        .pop()
        .expect("at least level 0")
        .iter()
        .map(|(a, b)| RInterval::new(BigReal::from_rational(a, prec, Rounding::Down), BigReal::from_rational(b, prec, Rounding::Up)).expect("a < b"))
        .collect()
}

/// Tree export of levels `1..=depth` with endpoints rounded outward to
/// 40 significant digits.
pub fn middle_third_export(depth: usize) -> TreeExport {
    let mut export = TreeExport {
        config: BTreeMap::new(),
        ..Default::default()
    };
    for (k, level) in middle_third_intervals(depth).into_iter().enumerate().skip(1) {
        export.levels.insert(
            k,
            LevelMeta {
                total: Integer::from(level.len()),
                branch: Integer::from(2),
                sampled: false,
                q: None,
            },
        );
        for (h, (a, b)) in level.iter().enumerate() {
            let iv = RInterval::new(BigReal::from_rational(a, 192, Rounding::Down), BigReal::from_rational(b, 192, Rounding::Up)).expect("a < b");
            let (lo, hi) = iv.to_decimal_outward(40);
            export.intervals.push((
                k,
                Integer::from(h),
                parse_rational(&lo).expect("decimal"),
                parse_rational(&hi).expect("decimal"),
            ));
        }
    }
    export
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn middle_third_structure() {
        let levels = middle_third_intervals(3);
        assert_eq!(levels[3].len(), 8);
        assert_eq!(levels[1][1], (Rational::from((2, 3)), Rational::from(1)));
        let leaves = middle_third_leaves(2, 64);
        assert_eq!(leaves.len(), 4);
    }
}
