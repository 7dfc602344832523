//! Convergence-rate estimation over particles converging to a target.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::spec::{AnalysisParams, ExperimentSpec};
use super::{
    empty_provenance, map_replications, resolve_point, resolve_target, Artifacts, ExperimentResult, Pooled,
    QqCollector, RegimeCounts, RegionRow, ReplicationSummary, RunOptions, StatRow,
};
use crate::clt::nonosc::{
    estimate_mu_sigma, fit_log_decay, h2_statistic, peak_index, ratio_chain_from, region_nonoscillatory, LagWeights,
    LogBase, RegionForm,
};
use crate::clt::region::RegionShape;
use crate::clt::report::{Theorem, TheoremReport};
use crate::error::{Error, Result};
use crate::objectives::{euclid, Objective};
use crate::regime::{classify_all, RegimeKind, RegimeLabel};
use crate::stats::median;
use crate::trajectory::Trajectory;

/// Linearity threshold for the per-particle log-distance regressions.
pub const R2_THRESHOLD: f64 = 0.95;

/// Default iteration for the fixed-step statistic H₂.
pub const DEFAULT_H2_N: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonOscParticle {
    pub replication: usize,
    pub particle: usize,
    /// Attractor the distances are measured from.
    pub g: Vec<f64>,
    /// `log|X_k|` of the analysed coordinate.
    pub log_abs: Vec<f64>,
    pub chain_window: (usize, usize),
    /// Regression of the coordinate log-distance on the chain window.
    pub coord_slope: f64,
    pub coord_r_squared: f64,
    /// Regression of the log Euclidean distance, from its peak to the floor.
    pub norm_slope: f64,
    pub norm_r_squared: f64,
    pub norm_window: (usize, usize),
    /// The analysed coordinate at the H₂ iteration.
    pub x_at_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonOscPooled {
    pub target: Vec<f64>,
    pub coord: usize,
    pub cohort_size: usize,
    /// Converging particles at the target left out as belated.
    pub belated_excluded: usize,
    /// Converging particles at the target without a usable decay window.
    pub without_window: usize,
    pub log_base: LogBase,
    pub lag_t: usize,
    pub lag_weights: LagWeights,
    pub mu_x: f64,
    pub sigma2_x: f64,
    pub sigma_x: f64,
    pub chains_used: usize,
    pub single_chain: bool,
    pub r2_threshold: f64,
    /// Share of the cohort whose log-distance regression reaches the threshold.
    pub r2_fraction: f64,
    pub r2_median: f64,
    /// Median last pre-floor iteration of the analysed coordinate.
    pub median_floor_iteration: f64,
    pub h2_n: usize,
    pub h2_count: usize,
    pub h2_below_floor: usize,
    pub h2_mean: f64,
    pub h2_var: f64,
    pub region_form: RegionForm,
    /// Share of particles whose two-sided region at `h2_n` covers `g`.
    pub region_coverage: f64,
}

/// Per-trajectory analysis: labels plus the chains and fits of every cohort
/// member. Returns the number of belated and window-less particles skipped.
pub fn analyze_nonoscillatory(
    traj: &Trajectory,
    obj: &Objective,
    analysis: &AnalysisParams,
) -> Result<(Vec<RegimeLabel>, Vec<NonOscParticle>, usize, usize)> {
    let target = analysis
        .target
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("non-oscillatory analysis needs a target".into()))?;
    let radius = analysis.cohort_radius;
    let target = resolve_target(obj, target, radius);
    let cfg = &analysis.regime;
    let base = cfg.log_base;
    let coord = analysis.coord;
    let h2_n = analysis.fixed_n.unwrap_or(DEFAULT_H2_N).min(traj.iterations());
    let labels = classify_all(traj, cfg)?;
    let mut out = Vec::new();
    let mut belated = 0;
    let mut without_window = 0;
    for label in labels.iter().filter(|l| l.is_converging() && euclid(&l.g, &target) <= radius) {
        if label.kind == RegimeKind::Belated {
            belated += 1;
            continue;
        }
        let s = label.particle;
        let g = resolve_point(obj, &label.g, radius, analysis.mode);
        let dists = traj.distance_path(s, &g);
        let Some(norm_fit) = peak_index(&dists, 0).and_then(|lo| fit_log_decay(&dists, lo, cfg.floor, base).ok())
        else {
            without_window += 1;
            continue;
        };
        let xs = traj.coord_path(s, coord);
        let lo = norm_fit.window.0;
        let coord_dists: Vec<f64> = xs.iter().map(|x| (x - g[coord]).abs()).collect();
        let (Ok(chain), Ok(coord_fit)) = (
            ratio_chain_from(&xs, lo, g[coord], cfg.floor, base),
            fit_log_decay(&coord_dists, lo, cfg.floor, base),
        ) else {
            without_window += 1;
            continue;
        };
        out.push(NonOscParticle {
            replication: traj.run_id as usize,
            particle: s,
            x_at_n: xs[h2_n],
            g,
            log_abs: chain.log_abs,
            chain_window: chain.window,
            coord_slope: coord_fit.slope,
            coord_r_squared: coord_fit.r_squared,
            norm_slope: norm_fit.slope,
            norm_r_squared: norm_fit.r_squared,
            norm_window: norm_fit.window,
        });
    }
    Ok((labels, out, belated, without_window))
}

pub(super) fn run(spec: &ExperimentSpec, obj: &Objective, opts: RunOptions) -> Result<ExperimentResult> {
    let a = &spec.analysis;
    let per_rep = map_replications(spec, obj, opts, |i, seed, traj| {
        let (labels, cohort, belated, without) = analyze_nonoscillatory(traj, obj, a)?;
        let summary = ReplicationSummary {
            replication: i,
            seed,
            cohort: cohort.len(),
            regimes: Some(RegimeCounts::from_labels(&labels)),
            flagged: belated,
            exits: traj.exits(),
        };
        Ok((summary, cohort, without))
    })?;
    let mut replications = Vec::new();
    let mut cohort = Vec::new();
    let mut without_window = 0;
    for (summary, members, without) in per_rep {
        replications.push(summary);
        cohort.extend(members);
        without_window += without;
    }
    let belated_excluded: usize = replications.iter().map(|r| r.flagged).sum();
    let target = resolve_target(obj, a.target.as_ref().expect("validated"), a.cohort_radius);
    if cohort.is_empty() {
        return Err(Error::EmptyCohort(format!(
            "no particle converged to {target:?} ({belated_excluded} belated, {without_window} without a decay window)"
        )));
    }

    let cfg = &a.regime;
    let base = cfg.log_base;
    let coord = a.coord;
    let chains: Vec<&[f64]> = cohort.iter().map(|p| p.log_abs.as_slice()).collect();
    let est = estimate_mu_sigma(&chains, a.lag_t, a.lag_weights)?;
    let mut warnings = est.warnings.clone();

    let h2_n = a.fixed_n.unwrap_or(DEFAULT_H2_N).min(spec.base.iterations);
    let mut h2 = Vec::new();
    let mut below = 0usize;
    let mut covered = 0usize;
    let mut artifacts = Artifacts::default();
    let mut first_region = None;
    for p in &cohort {
        let gc = p.g[coord];
        match h2_statistic(p.x_at_n, gc, h2_n, est.mu_x, cfg.floor, base) {
            Ok(v) => {
                h2.push(v);
                artifacts.stats.push(StatRow {
                    replication: p.replication,
                    particle: Some(p.particle),
                    statistic: "h2",
                    coord,
                    value: v,
                });
            }
            Err(Error::BelowFloor { .. }) => below += 1,
            Err(e) => return Err(e),
        }
        let region = region_nonoscillatory(p.x_at_n, h2_n, est.mu_x, est.sigma_x, a.alpha, a.region_form, base)?;
        let contains = region.contains(&[gc])?;
        if contains {
            covered += 1;
        }
        if let RegionShape::TwoSidedUnion { plus, minus } = &region.shape {
            for (name, iv) in [("lambda_plus", plus), ("lambda_minus", minus)] {
                artifacts.regions.push(RegionRow {
                    replication: p.replication,
                    particle: Some(p.particle),
                    region: name,
                    coord,
                    lower: iv.lower,
                    upper: iv.upper,
                    reference: gc,
                    contains,
                });
            }
        }
        first_region.get_or_insert(region);
        for (statistic, value) in [
            ("coord_slope", p.coord_slope),
            ("coord_r_squared", p.coord_r_squared),
            ("norm_slope", p.norm_slope),
            ("norm_r_squared", p.norm_r_squared),
        ] {
            artifacts.stats.push(StatRow {
                replication: p.replication,
                particle: Some(p.particle),
                statistic,
                coord,
                value,
            });
        }
    }
    if below > 0 {
        warnings.push(format!(
            "{below} particle(s) already at the distance floor at n = {h2_n}; H2 skipped for them"
        ));
    }
    let mut qq = QqCollector::new();
    qq.add("h2", &h2);
    warnings.extend(qq.warnings.iter().cloned());

    let m = cohort.len() as f64;
    let r2: Vec<f64> = cohort.iter().map(|p| p.norm_r_squared).collect();
    let floor_its: Vec<f64> = cohort.iter().map(|p| p.chain_window.1 as f64).collect();
    let pooled = NonOscPooled {
        target: target.clone(),
        coord,
        cohort_size: cohort.len(),
        belated_excluded,
        without_window,
        log_base: base,
        lag_t: a.lag_t,
        lag_weights: a.lag_weights,
        mu_x: est.mu_x,
        sigma2_x: est.sigma2_x,
        sigma_x: est.sigma_x,
        chains_used: est.chains_used,
        single_chain: est.single_chain,
        r2_threshold: R2_THRESHOLD,
        r2_fraction: r2.iter().filter(|r| **r >= R2_THRESHOLD).count() as f64 / m,
        r2_median: median(&r2),
        median_floor_iteration: median(&floor_its),
        h2_n,
        h2_count: h2.len(),
        h2_below_floor: below,
        h2_mean: crate::stats::mean(&h2),
        h2_var: crate::stats::variance(&h2),
        region_form: a.region_form,
        region_coverage: covered as f64 / m,
    };
    artifacts.qq = qq.data;

    let mut report = TheoremReport::new(
        Theorem::T2,
        json!({
            "omega": spec.base.omega,
            "c": spec.base.c,
            "target": target,
            "coord": coord,
            "lag_t": a.lag_t,
            "floor": cfg.floor,
            "log_base": base,
            "alpha": a.alpha,
        }),
        serde_json::to_value(&pooled)?,
        a.mode,
    )
    .with_warnings(warnings.iter().cloned());
    if let Some(r) = first_region {
        report = report.with_region(r);
    }
    Ok(ExperimentResult {
        name: spec.name.clone(),
        analysis: a.kind,
        mode: a.mode,
        replications,
        pooled: Pooled::NonOscillatory(pooled),
        qq: qq.summaries,
        reports: vec![report],
        warnings,
        provenance: empty_provenance(),
        artifacts,
    })
}
