//! Cross-sectional statistics at a fixed iteration, with and without the
//! belated-particle filter.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::spec::{AnalysisParams, ExperimentSpec};
use super::{
    empty_provenance, map_replications, resolve_target, Artifacts, ExperimentResult, Pooled, QqCollector,
    RegionRow, ReplicationSummary, RunOptions, StatRow,
};
use crate::clt::region::{ConfidenceRegion, Interval, RegionShape};
use crate::clt::report::{EstimateMode, Theorem, TheoremReport};
use crate::clt::swarm::{h3_with_exclusions, SwarmClt};
use crate::error::{Error, Result};
use crate::objectives::{euclid, Objective};
use crate::regime::{flag_belated, MIN_BELATED_POPULATION};
use crate::stats::{mean, variance};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmStats {
    pub unfiltered: SwarmClt,
    pub filtered: SwarmClt,
    pub ci_unfiltered: Interval,
    pub ci_filtered: Interval,
    pub covers_unfiltered: bool,
    pub covers_filtered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmReplication {
    pub replication: usize,
    /// Particle ids whose final personal and neighborhood bests reached the
    /// target.
    pub cohort: Vec<usize>,
    /// Cohort members flagged as belated at the fixed step.
    pub flagged: Vec<usize>,
    /// Reference value of the analysed coordinate of `g`.
    pub reference: f64,
    /// Absent when the cohort is too small for the statistics.
    pub stats: Option<SwarmStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmPooled {
    pub target: Vec<f64>,
    pub coord: usize,
    pub fixed_n: usize,
    pub replications_used: usize,
    pub mean_cohort: f64,
    pub min_cohort: usize,
    pub mean_flagged: f64,
    pub ci_coverage_unfiltered: f64,
    pub ci_coverage_filtered: f64,
    pub h3_unfiltered_mean: f64,
    pub h3_unfiltered_var: f64,
    pub h3_filtered_mean: f64,
    pub h3_filtered_var: f64,
}

fn interval_of(region: &ConfidenceRegion) -> Interval {
    match &region.shape {
        RegionShape::Interval { bounds } => bounds[0],
        _ => unreachable!("swarm intervals are scalar boxes"),
    }
}

/// Fixed-step analysis of one trajectory.
pub fn analyze_swarm(traj: &Trajectory, obj: &Objective, analysis: &AnalysisParams) -> Result<SwarmReplication> {
    let n = analysis
        .fixed_n
        .ok_or_else(|| Error::InvalidParams("swarm analysis needs fixed_n".into()))?;
    if n > traj.iterations() {
        return Err(Error::InvalidParams(format!(
            "fixed_n {n} exceeds the {} recorded iterations",
            traj.iterations()
        )));
    }
    let target = analysis
        .target
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("swarm analysis needs a target".into()))?;
    let radius = analysis.cohort_radius;
    let target = resolve_target(obj, target, radius);
    let last = traj.iterations();
    let cohort: Vec<usize> = (0..traj.swarm_size())
        .filter(|&s| euclid(traj.pbest(last, s), &target) <= radius && euclid(traj.nbest(last, s), &target) <= radius)
        .collect();
    let g: Vec<f64> = match analysis.mode {
        EstimateMode::Known => target.clone(),
        EstimateMode::Plugin => cohort
            .iter()
            .map(|&s| traj.nbest(last, s))
            .min_by(|a, b| obj.eval(a).total_cmp(&obj.eval(b)))
            .map(|g| g.to_vec())
            .unwrap_or_else(|| target.clone()),
    };
    let coord = analysis.coord;
    let reference = g[coord];
    let mut rep = SwarmReplication {
        replication: traj.run_id as usize,
        cohort: cohort.clone(),
        flagged: Vec::new(),
        reference,
        stats: None,
    };
    if cohort.len() < 2 {
        return Ok(rep);
    }
    let xs: Vec<f64> = cohort.iter().map(|&s| traj.x(n, s)[coord]).collect();
    let flagged_idx: BTreeSet<usize> = if cohort.len() >= MIN_BELATED_POPULATION {
        let base = analysis.regime.log_base;
        let logs: Vec<f64> = cohort.iter().map(|&s| base.log(euclid(traj.x(n, s), &g))).collect();
        flag_belated(&logs, analysis.regime.belated_z)?
    } else {
        BTreeSet::new()
    };
    rep.flagged = flagged_idx.iter().map(|&i| cohort[i]).collect();
    let (unfiltered, ci_u) = match h3_with_exclusions(&xs, reference, analysis.alpha, &BTreeSet::new()) {
        Ok(v) => v,
        Err(Error::Degenerate(_) | Error::InsufficientData(_)) => return Ok(rep),
        Err(e) => return Err(e),
    };
    let (filtered, ci_f) = match h3_with_exclusions(&xs, reference, analysis.alpha, &flagged_idx) {
        Ok(v) => v,
        Err(Error::Degenerate(_) | Error::InsufficientData(_)) => return Ok(rep),
        Err(e) => return Err(e),
    };
    let (ci_unfiltered, ci_filtered) = (interval_of(&ci_u), interval_of(&ci_f));
    rep.stats = Some(SwarmStats {
        unfiltered: SwarmClt {
            n_fixed: Some(n),
            ..unfiltered
        },
        filtered: SwarmClt {
            n_fixed: Some(n),
            ..filtered
        },
        covers_unfiltered: ci_unfiltered.contains(reference),
        covers_filtered: ci_filtered.contains(reference),
        ci_unfiltered,
        ci_filtered,
    });
    Ok(rep)
}

pub(super) fn run(spec: &ExperimentSpec, obj: &Objective, opts: RunOptions) -> Result<ExperimentResult> {
    let a = &spec.analysis;
    let reps = map_replications(spec, obj, opts, |_, _, traj| {
        let rep = analyze_swarm(traj, obj, a)?;
        Ok((rep, traj.exits()))
    })?;
    let seeds = super::seeds(spec);
    let fixed_n = a.fixed_n.expect("validated");
    let target = resolve_target(obj, a.target.as_ref().expect("validated"), a.cohort_radius);
    let mut replications = Vec::with_capacity(reps.len());
    let mut artifacts = Artifacts::default();
    let mut used = Vec::new();
    for (rep, exits) in &reps {
        replications.push(ReplicationSummary {
            replication: rep.replication,
            seed: seeds[rep.replication],
            cohort: rep.cohort.len(),
            regimes: None,
            flagged: rep.flagged.len(),
            exits: *exits,
        });
        if let Some(st) = &rep.stats {
            used.push(st);
            for (statistic, value) in [("h3_unfiltered", st.unfiltered.h3), ("h3_filtered", st.filtered.h3)] {
                artifacts.stats.push(StatRow {
                    replication: rep.replication,
                    particle: None,
                    statistic,
                    coord: a.coord,
                    value,
                });
            }
            for (region, iv, contains) in [
                ("ci_unfiltered", st.ci_unfiltered, st.covers_unfiltered),
                ("ci_filtered", st.ci_filtered, st.covers_filtered),
            ] {
                artifacts.regions.push(RegionRow {
                    replication: rep.replication,
                    particle: None,
                    region,
                    coord: a.coord,
                    lower: iv.lower,
                    upper: iv.upper,
                    reference: rep.reference,
                    contains,
                });
            }
        }
    }
    if used.is_empty() {
        return Err(Error::EmptyCohort(format!(
            "no replication had at least two particles settled at {target:?}"
        )));
    }
    let k = used.len() as f64;
    let h3_u: Vec<f64> = used.iter().map(|s| s.unfiltered.h3).collect();
    let h3_f: Vec<f64> = used.iter().map(|s| s.filtered.h3).collect();
    let mut qq = QqCollector::new();
    qq.add("h3_unfiltered", &h3_u);
    qq.add("h3_filtered", &h3_f);
    let pooled = SwarmPooled {
        target: target.clone(),
        coord: a.coord,
        fixed_n,
        replications_used: used.len(),
        mean_cohort: reps.iter().map(|(r, _)| r.cohort.len() as f64).sum::<f64>() / reps.len() as f64,
        min_cohort: reps.iter().map(|(r, _)| r.cohort.len()).min().unwrap_or(0),
        mean_flagged: reps.iter().map(|(r, _)| r.flagged.len() as f64).sum::<f64>() / reps.len() as f64,
        ci_coverage_unfiltered: used.iter().filter(|s| s.covers_unfiltered).count() as f64 / k,
        ci_coverage_filtered: used.iter().filter(|s| s.covers_filtered).count() as f64 / k,
        h3_unfiltered_mean: mean(&h3_u),
        h3_unfiltered_var: variance(&h3_u),
        h3_filtered_mean: mean(&h3_f),
        h3_filtered_var: variance(&h3_f),
    };
    let mut warnings = qq.warnings.clone();
    let skipped = reps.len() - used.len();
    if skipped > 0 {
        warnings.push(format!("{skipped} replication(s) had too few settled particles"));
    }
    artifacts.qq = qq.data;
    let first = used[0];
    let report = TheoremReport::new(
        Theorem::T3,
        json!({
            "omega": spec.base.omega,
            "c": spec.base.c,
            "fixed_n": fixed_n,
            "target": target,
            "coord": a.coord,
            "alpha": a.alpha,
            "belated_z": a.regime.belated_z,
        }),
        serde_json::to_value(&pooled)?,
        a.mode,
    )
    .with_region(ConfidenceRegion {
        level: 1.0 - a.alpha,
        shape: RegionShape::Interval {
            bounds: vec![first.ci_filtered],
        },
    })
    .with_warnings(warnings.iter().cloned());
    Ok(ExperimentResult {
        name: spec.name.clone(),
        analysis: a.kind,
        mode: a.mode,
        replications,
        pooled: Pooled::SwarmFixedStep(pooled),
        qq: qq.summaries,
        reports: vec![report],
        warnings,
        provenance: empty_provenance(),
        artifacts,
    })
}
