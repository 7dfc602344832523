//! Geometric convergence of a particle whose personal and neighborhood
//! bests coincide (`p = g`).
//!
//! The distance `|x_n − g|` shrinks like `exp(n μ_x)`; the ratio chain
//! `X_k = (x_k − g)/(x_{k−1} − g)` drives the rate, and
//! `log|x_N − g| − N μ_x` is asymptotically `N(0, N σ_x²)`.

use serde::{Deserialize, Serialize};

use super::quantile::two_sided_z;
use super::region::{ConfidenceRegion, Interval, RegionShape};
use crate::error::{Error, Result};
use crate::stats::{index_fit, LinearFit};

/// Logarithm base used for log-distances. Rates and variances are linear in
/// `1/ln(base)`, so results in one base convert exactly to the other.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Decimal,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Decimal => x.log10(),
        }
    }

    pub fn pow(self, y: f64) -> f64 {
        match self {
            LogBase::Natural => y.exp(),
            LogBase::Decimal => 10f64.powf(y),
        }
    }
}

/// Ratio chain over the window `[lo, hi]` of a scalar path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioChain {
    /// `X_k` for `k = lo+1 ..= hi`.
    pub ratios: Vec<f64>,
    /// `log|X_k|` in the chosen base.
    pub log_abs: Vec<f64>,
    pub window: (usize, usize),
}

/// Last index `hi ≥ lo` such that every distance on `[lo, hi]` is above the
/// floor, or `None` if `dists[lo]` itself is not.
pub fn pre_floor_end(dists: &[f64], lo: usize, floor: f64) -> Option<usize> {
    if lo >= dists.len() || !(dists[lo] > floor) {
        return None;
    }
    let run = dists[lo..].iter().take_while(|d| **d > floor).count();
    Some(lo + run - 1)
}

/// Builds the ratio chain of `xs` around `g`, starting at index `lo` and
/// stopping just before the distance first drops to `floor`.
pub fn ratio_chain_from(xs: &[f64], lo: usize, g: f64, floor: f64, base: LogBase) -> Result<RatioChain> {
    let dists: Vec<f64> = xs.iter().map(|x| (x - g).abs()).collect();
    let hi = pre_floor_end(&dists, lo, floor)
        .ok_or_else(|| Error::InsufficientData(format!("distance at index {lo} is already at or below the floor")))?;
    if hi == lo {
        return Err(Error::InsufficientData("window holds a single point; no ratios".into()));
    }
    let ratios: Vec<f64> = (lo + 1..=hi).map(|k| (xs[k] - g) / (xs[k - 1] - g)).collect();
    // Differences of logs rather than logs of ratios, so the telescoping
    // identity holds to round-off after summation.
    let log_abs = (lo + 1..=hi).map(|k| base.log(dists[k]) - base.log(dists[k - 1])).collect();
    Ok(RatioChain {
        ratios,
        log_abs,
        window: (lo, hi),
    })
}

pub fn ratio_chain(xs: &[f64], g: f64, floor: f64, base: LogBase) -> Result<RatioChain> {
    ratio_chain_from(xs, 0, g, floor, base)
}

/// Least-squares fit of `log d_n` against `n` over a pre-floor window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (usize, usize),
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Minimum number of points for a decay regression.
pub const MIN_FIT_POINTS: usize = 3;

/// Fits `log d_n = a + b n` on `[lo, hi]`, `hi` the last pre-floor index.
pub fn fit_log_decay(dists: &[f64], lo: usize, floor: f64, base: LogBase) -> Result<DecayFit> {
    let hi = pre_floor_end(dists, lo, floor)
        .ok_or_else(|| Error::InsufficientData(format!("distance at index {lo} is already at or below the floor")))?;
    if hi + 1 - lo < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "decay window [{lo}, {hi}] has fewer than {MIN_FIT_POINTS} points"
        )));
    }
    let logs: Vec<f64> = dists[lo..=hi].iter().map(|d| base.log(*d)).collect();
    let LinearFit {
        slope,
        intercept,
        r_squared,
    } = index_fit(lo, &logs).ok_or_else(|| Error::Degenerate("decay regression failed".into()))?;
    Ok(DecayFit {
        window: (lo, hi),
        slope,
        intercept,
        r_squared,
    })
}

/// Index of the largest distance at or after `from` — the start of the
/// decay phase once the particle has stopped moving away.
pub fn peak_index(dists: &[f64], from: usize) -> Option<usize> {
    dists
        .iter()
        .enumerate()
        .skip(from)
        .filter(|(_, d)| d.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
            Some((_, b)) if b >= *d => best,
            _ => Some((i, *d)),
        })
        .map(|(i, _)| i)
}

/// Weighting of lagged autocovariances in the long-run variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagWeights {
    /// Unweighted truncated sum.
    #[default]
    Plain,
    /// `1 − k/(T+1)` kernel weights.
    Bartlett,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSigma {
    pub mu_x: f64,
    pub sigma2_x: f64,
    pub sigma_x: f64,
    pub lag_t: usize,
    /// Chains that passed the length requirement.
    pub chains_used: usize,
    /// Per-chain slope of the cumulated log-distance against the index.
    pub slopes: Vec<f64>,
    pub r_squared: Vec<f64>,
    /// Set when fewer than two chains were usable.
    pub single_chain: bool,
    pub warnings: Vec<String>,
}

/// Pools rate and long-run variance estimates over chains of `log|X_k|`.
///
/// `μ_x` averages the per-chain regression slopes of the reconstructed
/// log-distance (the cumulated sums, whose slope is offset-free) against the
/// index. `σ_x²` is the pooled lag-0 variance of `log|X_k|` plus twice the
/// truncated sum of pooled lag-`k` autocovariances, `k = 1..=T`, all centered
/// at the pooled mean. Chains not longer than `T + 5` are skipped.
pub fn estimate_mu_sigma<C: AsRef<[f64]>>(chains: &[C], lag_t: usize, weights: LagWeights) -> Result<MuSigma> {
    let min_len = lag_t + 6;
    let usable: Vec<&[f64]> = chains.iter().map(|c| c.as_ref()).filter(|c| c.len() >= min_len).collect();
    let mut warnings = Vec::new();
    if usable.len() < chains.len() {
        warnings.push(format!(
            "skipped {} chain(s) shorter than {min_len}",
            chains.len() - usable.len()
        ));
    }
    if usable.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no chain has the {min_len} samples needed for lag {lag_t}"
        )));
    }
    let single_chain = usable.len() < 2;
    if single_chain {
        warnings.push("single chain: no pooling across particles".into());
    }

    let mut slopes = Vec::with_capacity(usable.len());
    let mut r_squared = Vec::with_capacity(usable.len());
    for chain in &usable {
        let mut level = 0.0;
        let cumulated: Vec<f64> = std::iter::once(0.0)
            .chain(chain.iter().map(|l| {
                level += l;
                level
            }))
            .collect();
        let fit = index_fit(0, &cumulated).ok_or_else(|| Error::Degenerate("rate regression failed".into()))?;
        slopes.push(fit.slope);
        r_squared.push(fit.r_squared);
    }
    let mu_x = slopes.iter().sum::<f64>() / slopes.len() as f64;

    let total: usize = usable.iter().map(|c| c.len()).sum();
    let center = usable.iter().flat_map(|c| c.iter()).sum::<f64>() / total as f64;
    let autocov = |k: usize| -> f64 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for chain in &usable {
            for i in k..chain.len() {
                acc += (chain[i] - center) * (chain[i - k] - center);
            }
            count += chain.len() - k;
        }
        acc / count as f64
    };
    let gamma0 = autocov(0);
    let mut sigma2 = gamma0;
    for k in 1..=lag_t {
        let w = match weights {
            LagWeights::Plain => 1.0,
            LagWeights::Bartlett => 1.0 - k as f64 / (lag_t as f64 + 1.0),
        };
        sigma2 += 2.0 * w * autocov(k);
    }
    if sigma2 < 0.0 {
        let floored = gamma0 * 1e-6;
        warnings.push(format!(
            "truncated long-run variance {sigma2:e} was negative; floored at {floored:e}"
        ));
        log::warn!("negative long-run variance {sigma2:e} floored at {floored:e}");
        sigma2 = floored;
    }
    Ok(MuSigma {
        mu_x,
        sigma2_x: sigma2,
        sigma_x: sigma2.sqrt(),
        lag_t,
        chains_used: usable.len(),
        slopes,
        r_squared,
        single_chain,
        warnings,
    })
}

/// `H₂(N) = (log|x_N − g_N| − N μ_x)/√N`.
pub fn h2_statistic(x_n: f64, g_n: f64, n: usize, mu_x: f64, floor: f64, base: LogBase) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParams("H2 needs N >= 1".into()));
    }
    let distance = (x_n - g_n).abs();
    if !(distance > floor) {
        return Err(Error::BelowFloor { distance, floor });
    }
    let n = n as f64;
    Ok((base.log(distance) - n * mu_x) / n.sqrt())
}

/// Exponent convention of the two-sided region for `g`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionForm {
    /// Distance band `[b^{nμ − √n σ q}, b^{nμ + √n σ q}]`, matching the
    /// `√n` scaling of the limit law.
    #[default]
    TheoremConsistent,
    /// Distance band `[b^{μ − σ q/√n}, b^{μ + σ q/√n}]`, kept for comparison.
    Literal,
}

/// The non-convex region `Λ⁺ ∪ Λ⁻` of points whose distance from `x_n` lies
/// in the band predicted for `|x_n − g|`.
pub fn region_nonoscillatory(
    x_n: f64,
    n: usize,
    mu_x: f64,
    sigma_x: f64,
    alpha: f64,
    form: RegionForm,
    base: LogBase,
) -> Result<ConfidenceRegion> {
    if n == 0 {
        return Err(Error::InvalidParams("region needs n >= 1".into()));
    }
    if !(sigma_x >= 0.0) {
        return Err(Error::InvalidParams(format!("sigma_x must be >= 0, got {sigma_x}")));
    }
    let q = two_sided_z(alpha)?;
    let nf = n as f64;
    let (center, spread) = match form {
        RegionForm::TheoremConsistent => (nf * mu_x, nf.sqrt() * sigma_x * q),
        RegionForm::Literal => (mu_x, sigma_x * q / nf.sqrt()),
    };
    let near = base.pow(center - spread);
    let far = base.pow(center + spread);
    Ok(ConfidenceRegion {
        level: 1.0 - alpha,
        shape: RegionShape::TwoSidedUnion {
            plus: Interval::new(x_n + near, x_n + far),
            minus: Interval::new(x_n - far, x_n - near),
        },
    })
}

/// Per-particle summary of the non-oscillatory analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonOscClt {
    pub particle: usize,
    pub ratios: Vec<f64>,
    pub log_abs: Vec<f64>,
    pub mu_x: f64,
    pub sigma2_x: f64,
    pub lag_t: usize,
    pub h2: Option<f64>,
    pub regression_window: (usize, usize),
    pub r_squared: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_sequence() {
        let xs: Vec<f64> = (0..30).map(|n| 0.5f64.powi(n)).collect();
        let ch = ratio_chain(&xs, 0.0, 1e-12, LogBase::Natural).unwrap();
        assert_eq!(ch.window, (0, 29));
        assert!(ch.ratios.iter().all(|r| (r - 0.5).abs() < 1e-15));
        let total: f64 = ch.log_abs.iter().sum();
        assert!((total - (xs[29].ln() - xs[0].ln())).abs() < 1e-10);
    }

    #[test]
    fn window_stops_at_floor() {
        let xs: Vec<f64> = (0..60).map(|n| 1.0 + 0.1f64.powi(n)).collect();
        let ch = ratio_chain(&xs, 1.0, 1e-12, LogBase::Decimal).unwrap();
        // 0.1^n > 1e-12 up to n = 11, with round-off pushing 12 either way.
        assert!(ch.window.1 == 11 || ch.window.1 == 12, "{:?}", ch.window);
        assert!(ch.log_abs.iter().all(|l| (l + 1.0).abs() < 1e-3));
    }

    #[test]
    fn empty_window_is_an_error() {
        let xs = [1.0, 1.0, 1.0];
        assert!(matches!(ratio_chain(&xs, 1.0, 1e-12, LogBase::Natural), Err(Error::InsufficientData(_))));
        assert!(ratio_chain(&[2.0, 1.0], 1.0, 1e-12, LogBase::Natural).is_err());
    }

    #[test]
    fn geometric_rate_and_zero_variance() {
        let rho: f64 = 0.93;
        let xs: Vec<f64> = (0..200).map(|n| rho.powi(n)).collect();
        let ch = ratio_chain(&xs, 0.0, 1e-12, LogBase::Natural).unwrap();
        let est = estimate_mu_sigma(&[ch.log_abs.clone(), ch.log_abs], 20, LagWeights::Plain).unwrap();
        assert!((est.mu_x - rho.ln()).abs() < 1e-12);
        assert!(est.sigma2_x.abs() < 1e-20);
        assert!(!est.single_chain);
    }

    #[test]
    fn short_chains_are_skipped() {
        let est = estimate_mu_sigma(&[vec![0.1; 30], vec![0.1; 10]], 20, LagWeights::Plain).unwrap();
        assert!(est.single_chain);
        assert_eq!(est.chains_used, 1);
        assert!(!est.warnings.is_empty());
        assert!(estimate_mu_sigma(&[vec![0.1; 10]], 20, LagWeights::Plain).is_err());
    }

    #[test]
    fn decay_fit_on_exact_exponential() {
        let d: Vec<f64> = (0..400).map(|n| 5.0 * (-0.07 * n as f64).exp()).collect();
        let fit = fit_log_decay(&d, 10, 1e-12, LogBase::Natural).unwrap();
        assert!((fit.slope + 0.07).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.window.0, 10);
        assert!(d[fit.window.1] > 1e-12 && (fit.window.1 + 1 == d.len() || d[fit.window.1 + 1] <= 1e-12));
    }

    #[test]
    fn peak_finds_first_maximum() {
        assert_eq!(peak_index(&[1.0, 3.0, 3.0, 2.0], 0), Some(1));
        assert_eq!(peak_index(&[1.0, 3.0, 3.0, 2.0], 2), Some(2));
        assert_eq!(peak_index(&[], 0), None);
    }

    #[test]
    fn h2_arithmetic() {
        let mu: f64 = -0.05;
        let x = (100.0 * mu).exp();
        assert!(h2_statistic(x, 0.0, 100, mu, 1e-12, LogBase::Natural).unwrap().abs() < 1e-12);
        let x = (100.0 * mu + 10.0).exp();
        assert!((h2_statistic(x, 0.0, 100, mu, 1e-12, LogBase::Natural).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            h2_statistic(1e-13, 0.0, 100, mu, 1e-12, LogBase::Natural),
            Err(Error::BelowFloor { .. })
        ));
    }

    #[test]
    fn region_degenerate_and_symmetric() {
        let r = region_nonoscillatory(2.0, 10, -0.1, 0.0, 0.05, RegionForm::TheoremConsistent, LogBase::Natural)
            .unwrap();
        let RegionShape::TwoSidedUnion { plus, minus } = r.shape else { panic!() };
        let e = (-1.0f64).exp();
        assert!((plus.lower - (2.0 + e)).abs() < 1e-15 && plus.lower == plus.upper);
        assert!((minus.upper - (2.0 - e)).abs() < 1e-15 && minus.lower == minus.upper);

        let r = region_nonoscillatory(2.0, 10, -0.1, 0.3, 0.05, RegionForm::Literal, LogBase::Decimal).unwrap();
        let RegionShape::TwoSidedUnion { plus, minus } = r.shape else { panic!() };
        assert!(((plus.lower - 2.0) - (2.0 - minus.upper)).abs() < 1e-14);
        assert!(((plus.upper - 2.0) - (2.0 - minus.lower)).abs() < 1e-14);
    }

    #[test]
    fn base_conversion_is_linear() {
        let d = [0.3, 0.01, 1e-5];
        for x in d {
            assert!((LogBase::Decimal.log(x) * std::f64::consts::LN_10 - LogBase::Natural.log(x)).abs() < 1e-13);
        }
    }
}
