use super::{AnalysisError, VerificationReport};
use crate::precision::FracPart;

/// Star discrepancy `D*_N = max_i max(i/N − x_(i), x_(i) − (i−1)/N)` of
/// points in `[0, 1)`.
pub fn star_discrepancy(points: &[f64]) -> Result<f64, AnalysisError> {
    if points.is_empty() {
        return Err(AnalysisError::InvalidInput("no points".into()));
    }
    if let Some(x) = points.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(AnalysisError::InvalidInput(format!("point {x} outside [0, 1)")));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let i = i as f64;
            ((i + 1.0) / n - x).max(x - i / n)
        })
        .fold(0.0, f64::max))
}

/// Midpoints of the fractional-part enclosures, skipping wrapped rows.
pub fn fractional_points(report: &VerificationReport) -> Vec<f64> {
    report
        .rows
        .iter()
        .filter_map(|r| match &r.frac {
            FracPart::Value(iv) => Some(iv.midpoint().to_f64()).filter(|x| (0.0..1.0).contains(x)),
            FracPart::Wrapped => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_at_zero() {
        assert_eq!(star_discrepancy(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn centred_grid() {
        for n in [1usize, 2, 7, 100] {
            let pts: Vec<f64> = (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect();
            let d = star_discrepancy(&pts).unwrap();
            assert!((d - 1.0 / (2 * n) as f64).abs() < 1e-12, "n={n} d={d}");
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(star_discrepancy(&[1.0]).is_err());
        assert!(star_discrepancy(&[]).is_err());
    }
}
