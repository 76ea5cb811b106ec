//! Time-domain statistics. Population (biased) moments throughout; a
//! constant window yields 0 for every statistic.

use crate::error::{Error, Result};

fn require(window: &[f64], n: usize) -> Result<()> {
    if window.len() < n {
        return Err(Error::TooShort { needed: n, got: window.len() });
    }
    Ok(())
}

pub(crate) fn is_constant(window: &[f64]) -> bool {
    window.windows(2).all(|w| w[0] == w[1])
}

/// Central moments (m2, m3, m4) about the mean.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

pub(crate) fn moments(window: &[f64]) -> Moments {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in window {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    Moments { m2: m2 / n, m3: m3 / n, m4: m4 / n }
}

pub(crate) fn population_std(window: &[f64]) -> f64 {
    if is_constant(window) {
        return 0.0;
    }
    moments(window).m2.sqrt()
}

pub fn stat_std(window: &[f64]) -> Result<f64> {
    require(window, 2)?;
    Ok(population_std(window))
}

/// Quantile of already sorted data with linear interpolation between order statistics.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub(crate) fn iqr_sorted(sorted: &[f64]) -> f64 {
    sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25)
}

pub fn stat_iqr(window: &[f64]) -> Result<f64> {
    require(window, 2)?;
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(iqr_sorted(&sorted))
}

pub(crate) fn skew_kurt(window: &[f64]) -> (f64, f64) {
    if is_constant(window) {
        return (0.0, 0.0);
    }
    let m = moments(window);
    if m.m2 <= 0.0 {
        return (0.0, 0.0);
    }
    (m.m3 / m.m2.powf(1.5), m.m4 / (m.m2 * m.m2) - 3.0)
}

/// Fisher-Pearson coefficient of skewness.
pub fn stat_skewness(window: &[f64]) -> Result<f64> {
    require(window, 2)?;
    Ok(skew_kurt(window).0)
}

/// Excess kurtosis.
pub fn stat_kurtosis(window: &[f64]) -> Result<f64> {
    require(window, 2)?;
    Ok(skew_kurt(window).1)
}

/// Strict sign changes between consecutive samples; a zero keeps the sign
/// of the last non-zero sample before it.
pub fn zero_crossings(window: &[f64]) -> Result<f64> {
    require(window, 2)?;
    let mut last_positive: Option<bool> = None;
    let mut count = 0usize;
    for &x in window {
        if x == 0.0 {
            continue;
        }
        let positive = x > 0.0;
        if let Some(prev) = last_positive {
            if prev != positive {
                count += 1;
            }
        }
        last_positive = Some(positive);
    }
    Ok(count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_window_is_degenerate() {
        let w = [0.1; 37];
        assert_eq!(stat_std(&w).unwrap(), 0.0);
        assert_eq!(stat_iqr(&w).unwrap(), 0.0);
        assert_eq!(stat_skewness(&w).unwrap(), 0.0);
        assert_eq!(stat_kurtosis(&w).unwrap(), 0.0);
    }

    #[test]
    fn one_to_five() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((stat_std(&w).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(stat_iqr(&w).unwrap(), 2.0);
        assert!(stat_skewness(&w).unwrap().abs() < 1e-12);
        // m4 / m2² = 6.8 / 4 = 1.7
        assert!((stat_kurtosis(&w).unwrap() - (1.7 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_window_has_no_skew() {
        let w: Vec<f64> = (-50..=50).map(|i| (i as f64).powi(3) * 0.01).collect();
        assert!(stat_skewness(&w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn crossings() {
        assert_eq!(zero_crossings(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(zero_crossings(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 3.0);
        assert_eq!(zero_crossings(&[1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(zero_crossings(&[1.0, 0.0, -1.0]).unwrap(), 1.0);
        assert_eq!(zero_crossings(&[0.0, 0.0, -1.0, 2.0]).unwrap(), 1.0);
        assert!(zero_crossings(&[1.0]).is_err());
    }

    #[test]
    fn short_windows_are_rejected() {
        assert!(stat_std(&[1.0]).is_err());
        assert!(stat_iqr(&[]).is_err());
    }
}
