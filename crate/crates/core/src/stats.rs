//! Small descriptive-statistics helpers shared by the estimators.

use std::cmp::Ordering;

/// Ordinary least squares fit of `y` on `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination. Equals 1 when `y` has no spread.
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// OLS fit of `y[i]` against the integer index `offset + i`.
pub fn index_fit(offset: usize, y: &[f64]) -> Option<LinearFit> {
    let x: Vec<f64> = (0..y.len()).map(|i| (offset + i) as f64).collect();
    linear_fit(&x, y)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by `n`).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divides by `n - 1`).
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Consistency factor turning the MAD into a standard-deviation estimate
/// under normality.
pub const MAD_SCALE: f64 = 1.4826;

/// Median and scaled median absolute deviation.
pub fn median_mad(xs: &[f64]) -> (f64, f64) {
    let med = median(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - med).abs()).collect();
    (med, MAD_SCALE * median(&dev))
}

/// Indices whose robust z-score `(x - median) / (1.4826 MAD)` exceeds
/// `threshold`. Only the upper tail is flagged. Returns nothing when the
/// MAD vanishes or is not finite.
pub fn upper_robust_outliers(xs: &[f64], threshold: f64) -> Vec<usize> {
    if xs.is_empty() {
        return Vec::new();
    }
    let (med, mad) = median_mad(xs);
    if !(med.is_finite() && mad.is_finite()) || mad <= 0.0 {
        return Vec::new();
    }
    xs.iter()
        .enumerate()
        .filter(|(_, &x)| (x - med) / mad > threshold)
        .map(|(i, _)| i)
        .collect()
}

pub fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let y: Vec<f64> = (0..10).map(|i| 3.0 - 0.5 * i as f64).collect();
        let fit = index_fit(0, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 3.0).abs() < 1e-13);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_line_has_unit_r2() {
        let fit = index_fit(5, &[2.0; 8]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, mad) = median_mad(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(m, 3.0);
        assert!((mad - MAD_SCALE).abs() < 1e-12);
    }

    #[test]
    fn outliers_upper_tail_only() {
        let mut xs = vec![0.0, 0.1, -0.1, 0.2, -0.2, 0.05, -0.05];
        xs.push(10.0);
        xs.push(-10.0);
        assert_eq!(upper_robust_outliers(&xs, 3.5), vec![7]);
        assert!(upper_robust_outliers(&[1.0; 6], 3.5).is_empty());
    }
}
