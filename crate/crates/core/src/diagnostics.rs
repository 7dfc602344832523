//! Normality and coverage diagnostics: normal probability plot data, its
//! correlation coefficient, and empirical coverage of confidence regions.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clt::quantile::normal_quantile;
use crate::clt::region::ConfidenceRegion;
use crate::error::{Error, Result};
use crate::stats::{cmp_f64, mean, pearson, sample_std};

pub const MIN_QQ_SAMPLE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    /// `(theoretical, standardized sample)` quantile pairs in increasing order.
    pub pairs: Vec<(f64, f64)>,
    pub qq_corr: f64,
}

/// Normal probability plot of `sample` with Hazen plotting positions
/// `(i − 0.5)/m`.
pub fn qq_data(sample: &[f64]) -> Result<QqData> {
    let m = sample.len();
    if m < MIN_QQ_SAMPLE {
        return Err(Error::InsufficientData(format!(
            "normal probability plot needs at least {MIN_QQ_SAMPLE} points, got {m}"
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("sample contains non-finite values".into()));
    }
    let mu = mean(sample);
    let sd = sample_std(sample);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(cmp_f64);
    let pairs: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let u = (i as f64 + 0.5) / m as f64;
            Ok((normal_quantile(u)?, (x - mu) / sd))
        })
        .collect::<Result<_>>()?;
    let (t, s): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    Ok(QqData {
        qq_corr: pearson(&t, &s),
        pairs,
    })
}

/// Fraction of `points` inside `region`.
pub fn coverage<P: AsRef<[f64]>>(points: &[P], region: &ConfidenceRegion) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InsufficientData("no points to test".into()));
    }
    let mut inside = 0usize;
    for p in points {
        if region.contains(p.as_ref())? {
            inside += 1;
        }
    }
    Ok(inside as f64 / points.len() as f64)
}

/// Fraction of `(point, region)` pairs with the point inside its own region,
/// the usual Monte Carlo coverage estimate.
pub fn paired_coverage<P: AsRef<[f64]>>(items: &[(P, ConfidenceRegion)]) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::InsufficientData("no regions to test".into()));
    }
    let mut inside = 0usize;
    for (p, r) in items {
        if r.contains(p.as_ref())? {
            inside += 1;
        }
    }
    Ok(inside as f64 / items.len() as f64)
}

impl QqData {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theoretical,sample")?;
        for (t, s) in &self.pairs {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }

    /// Standalone SVG scatter on a 600×600 canvas with the `y = x` diagonal.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 600.0;
        const PAD: f64 = 40.0;
        let lim = self
            .pairs
            .iter()
            .flat_map(|(a, b)| [a.abs(), b.abs()])
            .fold(1.0f64, f64::max)
            * 1.05;
        let map = |v: f64| PAD + (v + lim) / (2.0 * lim) * (SIZE - 2.0 * PAD);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 600 600" width="600" height="600">"#
        );
        let _ = writeln!(svg, r#"<rect width="600" height="600" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="300" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{} (r = {:.4})</text>"#,
            escape(title),
            self.qq_corr
        );
        let (lo, hi) = (map(-lim), map(lim));
        let _ = writeln!(
            svg,
            r#"<polyline points="{lo:.2},{:.2} {hi:.2},{:.2}" stroke="gray" fill="none"/>"#,
            SIZE - lo,
            SIZE - hi
        );
        for (t, s) in &self.pairs {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"#,
                map(*t),
                SIZE - map(*s)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
