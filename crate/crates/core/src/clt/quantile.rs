//! Standard normal and chi-square distribution functions and quantiles.

use crate::error::{Error, Result};

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Inverse standard normal CDF.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::OutsideUnitInterval { value: u });
    }
    Ok(standard_normal().inverse_cdf(u))
}

/// Upper `1 - alpha/2` normal quantile used by two-sided intervals.
pub fn two_sided_z(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutsideUnitInterval { value: alpha });
    }
    normal_quantile(1.0 - 0.5 * alpha)
}

fn chi_squared(dof: usize) -> Result<ChiSquared> {
    if dof == 0 {
        return Err(Error::InvalidParams(
            "chi-square needs at least one degree of freedom".into(),
        ));
    }
    ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParams(e.to_string()))
}

pub fn chi2_cdf(x: f64, dof: usize) -> Result<f64> {
    Ok(chi_squared(dof)?.cdf(x))
}

pub fn chi2_quantile(u: f64, dof: usize) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::OutsideUnitInterval { value: u });
    }
    Ok(chi_squared(dof)?.inverse_cdf(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Φ from the Taylor series of erf, summed with compensation. Only
    /// trustworthy for |x| ≲ 4, which is where it is used.
    fn series_cdf(x: f64) -> f64 {
        let z = x / std::f64::consts::SQRT_2;
        let mut term = z;
        let mut sum = z;
        let mut comp = 0.0;
        for n in 1..200 {
            term *= -z * z / n as f64;
            let t = term / (2 * n + 1) as f64 - comp;
            let s = sum + t;
            comp = (s - sum) - t;
            sum = s;
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    fn bisect_series(u: f64) -> f64 {
        let (mut lo, mut hi) = (-6.0, 6.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if series_cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn median_and_upper_quantiles() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let q = normal_quantile(0.975).unwrap();
        assert!((q - 1.959964).abs() < 1e-6);
        assert!((q - bisect_series(0.975)).abs() < 1e-10);
        for u in [0.001, 0.01, 0.1, 0.3, 0.7, 0.9, 0.99, 0.999] {
            assert!((normal_quantile(u).unwrap() - bisect_series(u)).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn rejects_outside_unit_interval() {
        for u in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(u).is_err());
            assert!(chi2_quantile(u, 2).is_err());
        }
    }

    #[test]
    fn chi2_two_dof_closed_form() {
        let q = chi2_quantile(0.95, 2).unwrap();
        assert!((q - (-2.0 * 0.05f64.ln())).abs() < 1e-8);
        assert!((q - 5.991465).abs() < 1e-6);
    }

    #[test]
    fn chi2_one_dof_is_squared_normal() {
        for u in [0.5, 0.9, 0.95, 0.99] {
            let z = normal_quantile(0.5 + 0.5 * u).unwrap();
            assert!((chi2_quantile(u, 1).unwrap() - z * z).abs() < 1e-8);
        }
    }

    #[test]
    fn chi2_cdf_reference_values() {
        // Erlang form for even degrees of freedom.
        let x: f64 = 7.3;
        let erlang = 1.0 - (-x / 2.0).exp() * (1.0 + x / 2.0 + (x / 2.0).powi(2) / 2.0);
        assert!((chi2_cdf(x, 6).unwrap() - erlang).abs() < 1e-13);
        let x: f64 = 30.0;
        let erlang = 1.0 - (-x / 2.0).exp() * (1.0 + x / 2.0);
        assert!((chi2_cdf(x, 4).unwrap() - erlang).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn normal_round_trip(u in 1e-10f64..(1.0 - 1e-10)) {
            let x = normal_quantile(u).unwrap();
            prop_assert!((normal_cdf(x) - u).abs() <= 1e-8 * u.min(1.0 - u).max(1e-3));
        }

        #[test]
        fn normal_quantile_is_increasing(a in 1e-9f64..0.999_999, gap in 1e-7f64..1e-3) {
            let b = (a + gap).min(1.0 - 1e-12);
            prop_assume!(b > a);
            prop_assert!(normal_quantile(b).unwrap() > normal_quantile(a).unwrap());
        }

        #[test]
        fn chi2_round_trip(u in 1e-6f64..0.999_999, dof in 1usize..12) {
            let x = chi2_quantile(u, dof).unwrap();
            prop_assert!((chi2_cdf(x, dof).unwrap() - u).abs() <= 1e-8);
        }
    }
}
