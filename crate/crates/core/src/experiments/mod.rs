//! Seeded Monte Carlo studies: many independent swarm runs, per-run regime
//! analysis, and pooled estimates with normality and coverage diagnostics.
//!
//! Replication `i` runs with seed `base.seed ^ i`, so replications are
//! independent of scheduling and any subset can be replayed alone.

mod nonosc;
mod oscillatory;
pub mod output;
pub mod spec;
mod swarm;

use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clt::report::{EstimateMode, TheoremReport};
use crate::diagnostics::QqData;
use crate::error::{Error, Result};
use crate::objectives::{Objective, Registry};
use crate::regime::{RegimeKind, RegimeLabel};
use crate::rng::replication_seed;
use crate::swarm::{run_with_id, PsoParams};
use crate::trajectory::Trajectory;

pub use nonosc::{analyze_nonoscillatory, NonOscParticle, NonOscPooled};
pub use oscillatory::{analyze_oscillatory, OscParticle, OscPooled};
pub use spec::{apply_overrides, AnalysisKind, AnalysisParams, ExperimentSpec};
pub use swarm::{analyze_swarm, SwarmPooled, SwarmReplication};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker thread cap; `None` uses rayon's default.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeCounts {
    pub oscillatory: usize,
    pub converging: usize,
    pub belated: usize,
    pub unclassified: usize,
}

impl RegimeCounts {
    pub fn from_labels(labels: &[RegimeLabel]) -> Self {
        let mut c = RegimeCounts::default();
        for l in labels {
            match l.kind {
                RegimeKind::Oscillatory => c.oscillatory += 1,
                RegimeKind::Converging => c.converging += 1,
                RegimeKind::Belated => c.belated += 1,
                RegimeKind::Unclassified => c.unclassified += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub replication: usize,
    pub seed: u64,
    /// Particles entering the pooled analysis from this replication.
    pub cohort: usize,
    /// Regime counts; absent for the fixed-step analysis, which does not
    /// classify.
    pub regimes: Option<RegimeCounts>,
    /// Belated particles removed by the fixed-step filter.
    pub flagged: usize,
    /// (particle, step) events outside the search domain.
    pub exits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pooled {
    Oscillatory(OscPooled),
    NonOscillatory(NonOscPooled),
    SwarmFixedStep(SwarmPooled),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqSummary {
    pub name: String,
    pub n: usize,
    pub qq_corr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec_digest: String,
    pub seeds: Vec<u64>,
    pub code_version: String,
    pub overrides: Vec<String>,
    /// Wall-clock creation time; excluded from [`ExperimentResult::digest`].
    pub created_at: Option<String>,
}

/// One row of `h_stats.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub replication: usize,
    /// Particle id, or `None` for swarm-level statistics.
    pub particle: Option<usize>,
    pub statistic: &'static str,
    pub coord: usize,
    pub value: f64,
}

/// One row of `regions.csv`: a scalar interval and whether it covers the
/// reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub replication: usize,
    /// Particle id, or `None` for swarm-level regions.
    pub particle: Option<usize>,
    pub region: &'static str,
    pub coord: usize,
    pub lower: f64,
    pub upper: f64,
    pub reference: f64,
    pub contains: bool,
}

/// Bulk outputs kept out of `result.json`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub qq: Vec<(String, QqData)>,
    pub stats: Vec<StatRow>,
    pub regions: Vec<RegionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub analysis: AnalysisKind,
    pub mode: EstimateMode,
    pub replications: Vec<ReplicationSummary>,
    pub pooled: Pooled,
    pub qq: Vec<QqSummary>,
    pub reports: Vec<TheoremReport>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

impl ExperimentResult {
    /// Pretty JSON with `created_at` blanked, the form used for replay checks.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.provenance.created_at = None;
        serde_json::to_string_pretty(&copy).expect("result serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn qq_corr(&self, name: &str) -> Option<f64> {
        self.qq.iter().find(|q| q.name == name).map(|q| q.qq_corr)
    }
}

pub(crate) struct QqCollector {
    pub summaries: Vec<QqSummary>,
    pub data: Vec<(String, QqData)>,
    pub warnings: Vec<String>,
}

impl QqCollector {
    pub fn new() -> Self {
        QqCollector {
            summaries: Vec::new(),
            data: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Adds the probability plot of `sample`; too-small or degenerate samples
    /// become warnings instead of failing the experiment.
    pub fn add(&mut self, name: &str, sample: &[f64]) {
        match crate::diagnostics::qq_data(sample) {
            Ok(qq) => {
                self.summaries.push(QqSummary {
                    name: name.to_string(),
                    n: sample.len(),
                    qq_corr: qq.qq_corr,
                });
                self.data.push((name.to_string(), qq));
            }
            Err(e) => self.warnings.push(format!("{name}: {e}")),
        }
    }
}

/// Point used as an attractor or target: in known mode, snapped to the
/// refined registered optimum within `radius` when there is one.
pub(crate) fn resolve_point(obj: &Objective, point: &[f64], radius: f64, mode: EstimateMode) -> Vec<f64> {
    match mode {
        EstimateMode::Plugin => point.to_vec(),
        EstimateMode::Known => obj
            .nearest_optimum(point, radius)
            .map(|o| o.refined.clone())
            .unwrap_or_else(|| point.to_vec()),
    }
}

/// Target of a spec, always snapped to the refined optimum when one is
/// registered nearby, because cohort membership is decided against it.
pub(crate) fn resolve_target(obj: &Objective, target: &[f64], radius: f64) -> Vec<f64> {
    resolve_point(obj, target, radius.max(0.05), EstimateMode::Known)
}

/// Runs `per_run` on every replication's trajectory, in parallel, returning
/// results in replication order.
pub(crate) fn map_replications<T, F>(spec: &ExperimentSpec, obj: &Objective, opts: RunOptions, per_run: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64, &Trajectory) -> Result<T> + Sync,
{
    let job = |i: usize| -> Result<T> {
        let seed = replication_seed(spec.base.seed, i as u64);
        let params = PsoParams {
            seed,
            ..spec.base.clone()
        };
        let traj = run_with_id(&params, obj, i as u64)?;
        per_run(i, seed, &traj)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    pool.install(|| (0..spec.replications).into_par_iter().map(job).collect())
}

pub fn seeds(spec: &ExperimentSpec) -> Vec<u64> {
    (0..spec.replications as u64).map(|i| replication_seed(spec.base.seed, i)).collect()
}

fn now_string() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("{secs}")
}

/// Runs the analysis named by the spec.
pub fn run_experiment(
    spec: &ExperimentSpec,
    registry: &Registry,
    opts: RunOptions,
    overrides: &[String],
) -> Result<ExperimentResult> {
    spec.validate()?;
    let obj = registry.lookup(&spec.objective)?;
    if obj.dim() != spec.base.dim {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: spec.base.dim,
        });
    }
    let mut result = match spec.analysis.kind {
        AnalysisKind::Oscillatory => oscillatory::run(spec, obj, opts)?,
        AnalysisKind::NonOscillatory => nonosc::run(spec, obj, opts)?,
        AnalysisKind::SwarmFixedStep => swarm::run(spec, obj, opts)?,
    };
    result.provenance = Provenance {
        spec_digest: spec.digest(),
        seeds: seeds(spec),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        overrides: overrides.to_vec(),
        created_at: Some(now_string()),
    };
    Ok(result)
}

pub(crate) fn empty_provenance() -> Provenance {
    Provenance {
        spec_digest: String::new(),
        seeds: Vec::new(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        overrides: Vec::new(),
        created_at: None,
    }
}
