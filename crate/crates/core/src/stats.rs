//! Summary statistics for the analysis report: count, mean, sample standard
//! deviation, extremes and adjusted Fisher-Pearson skewness.

use serde::{Deserialize, Serialize};

/// Per-series summary block of the analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
}

/// Computes summary statistics over a non-empty slice.
///
/// The standard deviation uses the n-1 denominator and is reported as 0 for
/// fewer than 2 values; skewness is the adjusted Fisher-Pearson estimator and
/// is reported as 0 for fewer than 3 values or a zero-variance sample.
///
/// # Panics
/// Panics when `values` is empty.
pub fn compute_series_stats(values: &[f64]) -> SeriesStats {
    assert!(!values.is_empty(), "stats require at least one value");
    let n = values.len();
    let nf = n as f64;

    let mean = values.iter().sum::<f64>() / nf;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }

    let sd = if n < 2 { 0.0 } else { (m2 / (nf - 1.0)).sqrt() };

    let skewness = if n < 3 || m2 == 0.0 {
        0.0
    } else {
        // g1 over central moments, then the sample-size adjustment.
        let g1 = (m3 / nf) / (m2 / nf).powf(1.5);
        g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
    };

    SeriesStats {
        count: n,
        mean,
        sd,
        min,
        max,
        skewness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_has_zero_spread() {
        let s = compute_series_stats(&[1.0, 1.0, 1.0]);
        assert_eq!(s.count, 3);
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!((s.min, s.max), (1.0, 1.0));
    }

    #[test]
    fn symmetric_sample() {
        let s = compute_series_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // sqrt(5/3), worked by hand from the n-1 definition
        assert!((s.sd - 1.2909944487358056).abs() < 1e-12);
        assert!(s.skewness.abs() < 1e-12);
    }

    #[test]
    fn single_value() {
        let s = compute_series_stats(&[7.5]);
        assert_eq!(s.count, 1);
        assert_eq!(s.mean, 7.5);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.skewness, 0.0);
    }

    #[test]
    fn skewness_matches_direct_evaluation() {
        // Independent route: explicit loops over the definition, no shared
        // accumulation with the implementation.
        let data = [1.0, 2.0, 3.0, 10.0];
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let m2: f64 = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3: f64 = data.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let expected = (m3 / m2.powf(1.5)) * (n * (n - 1.0)).sqrt() / (n - 2.0);

        let s = compute_series_stats(&data);
        assert!((s.skewness - expected).abs() < 1e-12);
        assert!(s.skewness > 0.0, "right-tailed sample must skew positive");
    }
}
