//! Cross-sectional limit law at a fixed iteration as the swarm grows.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::quantile::two_sided_z;
use super::region::{ConfidenceRegion, Interval, RegionShape};
use crate::error::{Error, Result};
use crate::regime::{flag_belated, DEFAULT_BELATED_Z};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmClt {
    pub n_fixed: Option<usize>,
    pub xbar_s: f64,
    /// `(1/S) Σ (x_i − g)²` over the retained particles.
    pub sigma2_hat: f64,
    pub h3: f64,
    pub s_used: usize,
    /// Indices into the input sample that were excluded.
    pub filtered_ids: BTreeSet<usize>,
}

/// H₃ and the interval `x̄ ± (σ̂/√S) q_{1−α/2}` after removing `excluded`.
pub fn h3_with_exclusions(
    xs_at_n: &[f64],
    g_n: f64,
    alpha: f64,
    excluded: &BTreeSet<usize>,
) -> Result<(SwarmClt, ConfidenceRegion)> {
    let kept: Vec<f64> = xs_at_n
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(_, x)| *x)
        .collect();
    let s = kept.len();
    if s < 2 {
        return Err(Error::InsufficientData(format!("{s} particle(s) left; need at least 2")));
    }
    let sf = s as f64;
    let sum_dev: f64 = kept.iter().map(|x| x - g_n).sum();
    let sigma2_hat = kept.iter().map(|x| (x - g_n).powi(2)).sum::<f64>() / sf;
    if !(sigma2_hat > 0.0) {
        return Err(Error::Degenerate("every particle sits exactly at g".into()));
    }
    let sigma_hat = sigma2_hat.sqrt();
    let h3 = sum_dev / (sf.sqrt() * sigma_hat);
    let xbar_s = kept.iter().sum::<f64>() / sf;
    let half = sigma_hat / sf.sqrt() * two_sided_z(alpha)?;
    let region = ConfidenceRegion {
        level: 1.0 - alpha,
        shape: RegionShape::Interval {
            bounds: vec![Interval::centered(xbar_s, half)],
        },
    };
    let clt = SwarmClt {
        n_fixed: None,
        xbar_s,
        sigma2_hat,
        h3,
        s_used: s,
        filtered_ids: excluded.iter().copied().filter(|i| *i < xs_at_n.len()).collect(),
    };
    Ok((clt, region))
}

/// H₃ and its interval; with `filter`, belated particles are first flagged
/// from `log|x_i − g|` with the default robust z threshold.
pub fn h3_and_ci(xs_at_n: &[f64], g_n: f64, alpha: f64, filter: bool) -> Result<(SwarmClt, ConfidenceRegion)> {
    let excluded = if filter {
        let logs: Vec<f64> = xs_at_n.iter().map(|x| (x - g_n).abs().ln()).collect();
        flag_belated(&logs, DEFAULT_BELATED_Z)?
    } else {
        BTreeSet::new()
    };
    h3_with_exclusions(xs_at_n, g_n, alpha, &excluded)
}
