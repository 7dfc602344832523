//! Pooled running-mean statistics of oscillating particles.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::spec::{AnalysisParams, ExperimentSpec};
use super::{
    empty_provenance, map_replications, resolve_point, resolve_target, Artifacts, ExperimentResult, Pooled, QqCollector,
    RegimeCounts, RegionRow, ReplicationSummary, RunOptions, StatRow,
};
use crate::clt::oscillatory::{
    ci_oscillatory, h1_quadratic_form, h1_statistic, running_h1_inside_fraction, OscillatoryClt,
};
use crate::clt::quantile::chi2_quantile;
use crate::clt::region::RegionShape;
use crate::clt::report::{Theorem, TheoremReport};
use crate::error::{Error, Result};
use crate::objectives::{euclid, Objective};
use crate::regime::{classify_all, RegimeKind, RegimeLabel};
use crate::trajectory::Trajectory;

/// Level of the running-trajectory containment check.
pub const RUNNING_LEVEL: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscParticle {
    pub replication: usize,
    pub particle: usize,
    pub clt: OscillatoryClt,
    /// `H₁ᵀ Γ⁻¹ H₁`.
    pub quad_form: f64,
    pub inside_ellipse: bool,
    /// Per coordinate: does the interval cover `θ_ℓ`?
    pub ci_covers: Vec<bool>,
    pub ci_bounds: Vec<(f64, f64)>,
    /// Share of the running statistics `H₁(n)` inside the ellipse at level
    /// [`RUNNING_LEVEL`].
    pub running_inside: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscPooled {
    pub cohort_size: usize,
    pub level: f64,
    pub n_used: usize,
    pub l_const: f64,
    pub c_const: f64,
    /// Share of cohort particles whose `H₁` lies in the chi-square ellipse.
    pub ellipse_coverage: f64,
    pub ci_coverage: Vec<f64>,
    pub running_level: f64,
    pub running_inside_mean: f64,
    pub h1_mean: Vec<f64>,
    pub h1_var: Vec<f64>,
    /// Average of the predicted variances `Γ_ℓℓ` over the cohort.
    pub gamma_mean: Vec<f64>,
}

fn matches_pair(label: &RegimeLabel, pair: &[Vec<f64>; 2], radius: f64) -> bool {
    let near = |a: &[f64], b: &[f64]| euclid(a, b) <= radius;
    (near(&label.p, &pair[0]) && near(&label.g, &pair[1])) || (near(&label.p, &pair[1]) && near(&label.g, &pair[0]))
}

/// Classifies one trajectory and computes the oscillatory statistics of every
/// particle in the cohort.
pub fn analyze_oscillatory(
    traj: &Trajectory,
    obj: &Objective,
    analysis: &AnalysisParams,
    omega: f64,
    c: f64,
) -> Result<(Vec<RegimeLabel>, Vec<OscParticle>)> {
    let labels = classify_all(traj, &analysis.regime)?;
    let radius = analysis.cohort_radius;
    let pair = analysis
        .pair
        .as_ref()
        .map(|[a, b]| [resolve_target(obj, a, radius), resolve_target(obj, b, radius)]);
    let radius2 = chi2_quantile(1.0 - analysis.alpha, traj.dim())?;
    let from = analysis.regime.burn_in + 1;
    let to = traj.iterations();
    let mut out = Vec::new();
    for label in labels.iter().filter(|l| l.kind == RegimeKind::Oscillatory) {
        if let Some(pair) = &pair {
            if !matches_pair(label, pair, radius) {
                continue;
            }
        }
        let p = resolve_point(obj, &label.p, radius, analysis.mode);
        let g = resolve_point(obj, &label.g, radius, analysis.mode);
        let s = label.particle;
        let clt = h1_statistic(traj.positions(s, from, to), &p, &g, omega, c)?;
        let quad_form = match h1_quadratic_form(&clt) {
            Ok(q) => q,
            // A coordinate with p = g carries no spread; skip the particle.
            Err(Error::SingularGamma { .. }) => continue,
            Err(e) => return Err(e),
        };
        let ci = ci_oscillatory(&clt, analysis.alpha)?;
        let RegionShape::Interval { bounds } = &ci.shape else {
            unreachable!("coordinate intervals")
        };
        let ci_covers = bounds.iter().zip(&clt.theta).map(|(b, t)| b.contains(*t)).collect();
        let ci_bounds = bounds.iter().map(|b| (b.lower, b.upper)).collect();
        let path: Vec<&[f64]> = traj.positions(s, from, to).collect();
        let running_inside = running_h1_inside_fraction(&path, &p, &g, omega, c, 1.0 - RUNNING_LEVEL)?;
        out.push(OscParticle {
            replication: traj.run_id as usize,
            particle: s,
            quad_form,
            inside_ellipse: quad_form <= radius2,
            ci_covers,
            ci_bounds,
            running_inside,
            clt,
        });
    }
    Ok((labels, out))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    (crate::stats::mean(xs), crate::stats::variance(xs))
}

pub(super) fn run(spec: &ExperimentSpec, obj: &Objective, opts: RunOptions) -> Result<ExperimentResult> {
    let a = &spec.analysis;
    let per_rep = map_replications(spec, obj, opts, |i, seed, traj| {
        let (labels, cohort) = analyze_oscillatory(traj, obj, a, spec.base.omega, spec.base.c)?;
        let summary = ReplicationSummary {
            replication: i,
            seed,
            cohort: cohort.len(),
            regimes: Some(RegimeCounts::from_labels(&labels)),
            flagged: 0,
            exits: traj.exits(),
        };
        Ok((summary, cohort))
    })?;
    let (replications, cohorts): (Vec<_>, Vec<_>) = per_rep.into_iter().unzip();
    let cohort: Vec<OscParticle> = cohorts.into_iter().flatten().collect();
    if cohort.is_empty() {
        let found: usize = replications
            .iter()
            .filter_map(|r| r.regimes.as_ref())
            .map(|c| c.oscillatory)
            .sum();
        return Err(Error::EmptyCohort(format!(
            "no oscillating particle matched the selection ({found} oscillatory before pair matching, {} replications)",
            spec.replications
        )));
    }

    let d = spec.base.dim;
    let m = cohort.len() as f64;
    let mut qq = QqCollector::new();
    let mut h1_mean = Vec::with_capacity(d);
    let mut h1_var = Vec::with_capacity(d);
    let mut ci_coverage = Vec::with_capacity(d);
    let mut gamma_mean = Vec::with_capacity(d);
    for l in 0..d {
        let sample: Vec<f64> = cohort.iter().map(|o| o.clt.h1[l]).collect();
        let (mu, var) = mean_var(&sample);
        h1_mean.push(mu);
        h1_var.push(var);
        gamma_mean.push(cohort.iter().map(|o| o.clt.gamma[l]).sum::<f64>() / m);
        ci_coverage.push(cohort.iter().filter(|o| o.ci_covers[l]).count() as f64 / m);
        qq.add(&format!("h1_{l}"), &sample);
    }
    let first = &cohort[0].clt;
    let pooled = OscPooled {
        cohort_size: cohort.len(),
        level: 1.0 - a.alpha,
        n_used: first.n_used,
        l_const: first.l_const,
        c_const: first.c_const,
        ellipse_coverage: cohort.iter().filter(|o| o.inside_ellipse).count() as f64 / m,
        ci_coverage,
        running_level: RUNNING_LEVEL,
        running_inside_mean: cohort.iter().map(|o| o.running_inside).sum::<f64>() / m,
        h1_mean,
        h1_var,
        gamma_mean,
    };

    let mut artifacts = Artifacts::default();
    for o in &cohort {
        for l in 0..d {
            artifacts.stats.push(StatRow {
                replication: o.replication,
                particle: Some(o.particle),
                statistic: "h1",
                coord: l,
                value: o.clt.h1[l],
            });
            let (lower, upper) = o.ci_bounds[l];
            artifacts.regions.push(RegionRow {
                replication: o.replication,
                particle: Some(o.particle),
                region: "ci_oscillatory",
                coord: l,
                lower,
                upper,
                reference: o.clt.theta[l],
                contains: o.ci_covers[l],
            });
        }
        artifacts.stats.push(StatRow {
            replication: o.replication,
            particle: Some(o.particle),
            statistic: "h1_quad_form",
            coord: 0,
            value: o.quad_form,
        });
    }
    artifacts.qq = qq.data;

    let report = TheoremReport::new(
        Theorem::T1,
        json!({
            "omega": spec.base.omega,
            "c": spec.base.c,
            "burn_in": a.regime.burn_in,
            "alpha": a.alpha,
            "pair": a.pair,
        }),
        serde_json::to_value(&pooled)?,
        a.mode,
    )
    .with_warnings(qq.warnings.iter().cloned());
    Ok(ExperimentResult {
        name: spec.name.clone(),
        analysis: a.kind,
        mode: a.mode,
        replications,
        pooled: Pooled::Oscillatory(pooled),
        qq: qq.summaries,
        reports: vec![report],
        warnings: qq.warnings,
        provenance: empty_provenance(),
        artifacts,
    })
}
