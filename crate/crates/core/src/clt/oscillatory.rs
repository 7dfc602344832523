//! Limit law of the running mean of an oscillating particle (`p ≠ g`).
//!
//! Once `p` and `g` are frozen, `√N (x̄_N − (p+g)/2)` is asymptotically
//! Gaussian with diagonal covariance `Γ = ℭ · diag(p − g)²`.

use serde::{Deserialize, Serialize};

use super::constraints::theorem1_constants;
use super::quantile::{chi2_quantile, two_sided_z};
use super::region::{ConfidenceRegion, Interval, RegionShape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryClt {
    pub l_const: f64,
    pub c_const: f64,
    /// Diagonal of `Γ`.
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub xbar: Vec<f64>,
    pub h1: Vec<f64>,
    pub n_used: usize,
    pub p: Vec<f64>,
    pub g: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Mean of a path of `d`-vectors.
fn path_mean<I, P>(path: I) -> Result<(Vec<f64>, usize)>
where
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for x in path {
        let x = x.as_ref();
        if n == 0 {
            sum = vec![0.0; x.len()];
        } else if x.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                got: x.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(x) {
            *s += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::InsufficientData("empty path".into()));
    }
    for s in &mut sum {
        *s /= n as f64;
    }
    Ok((sum, n))
}

/// Builds the oscillatory statistic `H₁ = √N (x̄_N − θ)` from a path of
/// positions (typically the post-burn-in window of one particle).
pub fn h1_statistic<I, P>(path: I, p: &[f64], g: &[f64], omega: f64, c: f64) -> Result<OscillatoryClt>
where
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    if p.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: g.len(),
        });
    }
    let consts = theorem1_constants(omega, c)?;
    let (xbar, n) = path_mean(path)?;
    if xbar.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: xbar.len(),
        });
    }
    let theta: Vec<f64> = p.iter().zip(g).map(|(a, b)| 0.5 * (a + b)).collect();
    let gamma: Vec<f64> = p.iter().zip(g).map(|(a, b)| consts.c_const * (a - b).powi(2)).collect();
    let root_n = (n as f64).sqrt();
    let h1 = xbar.iter().zip(&theta).map(|(m, t)| root_n * (m - t)).collect();
    let mut warnings = Vec::new();
    for (coord, gm) in gamma.iter().enumerate() {
        if *gm == 0.0 {
            warnings.push(format!("p and g coincide on coordinate {coord}: covariance is degenerate"));
        }
    }
    Ok(OscillatoryClt {
        l_const: consts.l_const,
        c_const: consts.c_const,
        gamma,
        theta,
        xbar,
        h1,
        n_used: n,
        p: p.to_vec(),
        g: g.to_vec(),
        warnings,
    })
}

/// Per-coordinate intervals `x̄_ℓ ± |p_ℓ − g_ℓ| √(ℭ/N) q_{1−α/2}`.
pub fn ci_oscillatory(osc: &OscillatoryClt, alpha: f64) -> Result<ConfidenceRegion> {
    let z = two_sided_z_or_zero(alpha)?;
    let scale = (osc.c_const / osc.n_used as f64).sqrt() * z;
    let bounds = osc
        .xbar
        .iter()
        .zip(osc.p.iter().zip(&osc.g))
        .map(|(m, (p, g))| Interval::centered(*m, (p - g).abs() * scale))
        .collect();
    Ok(ConfidenceRegion {
        level: 1.0 - alpha,
        shape: RegionShape::Interval { bounds },
    })
}

/// `q_{1−α/2}`, with the limit `α = 1` giving the median, zero.
fn two_sided_z_or_zero(alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        Ok(0.0)
    } else {
        two_sided_z(alpha)
    }
}

fn precision(osc: &OscillatoryClt) -> Result<Vec<f64>> {
    osc.gamma
        .iter()
        .enumerate()
        .map(|(coord, g)| {
            if *g > 0.0 {
                Ok(osc.n_used as f64 / g)
            } else {
                Err(Error::SingularGamma { coord })
            }
        })
        .collect()
}

/// The region `{t : N ‖Γ^{−1/2}(t − x̄_N)‖² ≤ χ²_{1−α}(d)}`.
pub fn ellipsoid_oscillatory(osc: &OscillatoryClt, alpha: f64) -> Result<ConfidenceRegion> {
    let precision_diag = precision(osc)?;
    let radius2 = chi2_quantile(1.0 - alpha, osc.xbar.len())?;
    Ok(ConfidenceRegion {
        level: 1.0 - alpha,
        shape: RegionShape::Ellipsoid {
            center: osc.xbar.clone(),
            precision_diag,
            radius2,
        },
    })
}

/// `H₁ᵀ Γ⁻¹ H₁`, asymptotically `χ²(d)`.
pub fn h1_quadratic_form(osc: &OscillatoryClt) -> Result<f64> {
    osc.gamma
        .iter()
        .zip(&osc.h1)
        .enumerate()
        .map(|(coord, (g, h))| {
            if *g > 0.0 {
                Ok(h * h / g)
            } else {
                Err(Error::SingularGamma { coord })
            }
        })
        .sum()
}

/// Fraction of the running statistics `H₁(n)`, `n = 1..=N`, whose quadratic
/// form stays below the `1 − α` chi-square quantile.
pub fn running_h1_inside_fraction<P: AsRef<[f64]>>(
    path: &[P],
    p: &[f64],
    g: &[f64],
    omega: f64,
    c: f64,
    alpha: f64,
) -> Result<f64> {
    let consts = theorem1_constants(omega, c)?;
    let d = p.len();
    let radius2 = chi2_quantile(1.0 - alpha, d)?;
    let gamma: Vec<f64> = p.iter().zip(g).map(|(a, b)| consts.c_const * (a - b).powi(2)).collect();
    if let Some(coord) = gamma.iter().position(|g| *g <= 0.0) {
        return Err(Error::SingularGamma { coord });
    }
    if path.is_empty() {
        return Err(Error::InsufficientData("empty path".into()));
    }
    let theta: Vec<f64> = p.iter().zip(g).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut sum = vec![0.0; d];
    let mut inside = 0usize;
    for (i, x) in path.iter().enumerate() {
        let x = x.as_ref();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        for (s, v) in sum.iter_mut().zip(x) {
            *s += v;
        }
        let n = (i + 1) as f64;
        // H1(n)_l = √n (S_l/n − θ_l)  ⇒  H1² = (S_l − nθ_l)²/n.
        let q: f64 = (0..d).map(|l| (sum[l] - n * theta[l]).powi(2) / n / gamma[l]).sum();
        if q <= radius2 {
            inside += 1;
        }
    }
    Ok(inside as f64 / path.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: f64 = 0.72984;
    const C: f64 = 1.496172;

    #[test]
    fn constant_path_at_theta() {
        let p = [3.58, -1.84];
        let g = [3.0, 2.0];
        let theta = [3.29, 0.08];
        let path = vec![theta.to_vec(); 100];
        let osc = h1_statistic(&path, &p, &g, W, C).unwrap();
        for h in &osc.h1 {
            assert!(h.abs() < 1e-12);
        }
        assert_eq!(osc.n_used, 100);
        assert!(osc.warnings.is_empty());
    }

    #[test]
    fn alternating_path_cancels() {
        let p = vec![1.0, -2.0];
        let g = vec![-1.0, 4.0];
        let path: Vec<Vec<f64>> = (0..50).map(|i| if i % 2 == 0 { p.clone() } else { g.clone() }).collect();
        let osc = h1_statistic(&path, &p, &g, W, C).unwrap();
        assert!(osc.h1.iter().all(|h| h.abs() < 1e-12));
    }

    #[test]
    fn half_width_reference() {
        let osc = OscillatoryClt {
            l_const: 0.0857178,
            c_const: 0.223024,
            gamma: vec![0.223024 * 3.84f64.powi(2)],
            theta: vec![0.0],
            xbar: vec![0.0],
            h1: vec![0.0],
            n_used: 2000,
            p: vec![3.84],
            g: vec![0.0],
            warnings: vec![],
        };
        let r = ci_oscillatory(&osc, 0.05).unwrap();
        let RegionShape::Interval { bounds } = r.shape else { panic!() };
        assert!((bounds[0].half_width() - 0.07948).abs() < 1e-5);
        let r = ci_oscillatory(&osc, 1.0).unwrap();
        let RegionShape::Interval { bounds } = r.shape else { panic!() };
        assert_eq!(bounds[0].half_width(), 0.0);
    }

    #[test]
    fn degenerate_coordinate() {
        let p = [1.0, 2.0];
        let g = [1.0, 3.0];
        let osc = h1_statistic([[1.0, 2.5]], &p, &g, W, C).unwrap();
        assert_eq!(osc.warnings.len(), 1);
        assert!(matches!(ellipsoid_oscillatory(&osc, 0.05), Err(Error::SingularGamma { coord: 0 })));
        let ci = ci_oscillatory(&osc, 0.05).unwrap();
        let RegionShape::Interval { bounds } = ci.shape else { panic!() };
        assert_eq!(bounds[0].lower, bounds[0].upper);
    }

    #[test]
    fn ellipsoid_radius_and_center() {
        let osc = h1_statistic([[0.3, 0.1], [0.5, -0.2]], &[1.0, 1.0], &[0.0, -1.0], W, C).unwrap();
        let e = ellipsoid_oscillatory(&osc, 0.05).unwrap();
        let RegionShape::Ellipsoid { radius2, .. } = &e.shape else { panic!() };
        assert!((radius2 - 5.991465).abs() < 1e-6);
        assert!(e.contains(&osc.xbar).unwrap());
    }

    #[test]
    fn running_fraction_at_theta() {
        let path = vec![[0.5, 0.0]; 20];
        let f = running_h1_inside_fraction(&path, &[1.0, 1.0], &[0.0, -1.0], W, C, 0.05).unwrap();
        assert_eq!(f, 1.0);
    }
}
