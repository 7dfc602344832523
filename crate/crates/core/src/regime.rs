//! Sorting particles into the oscillating (`p ≠ g`) and converging
//! (`p = g`) regimes, stagnation detection, and belated-particle flags.
//!
//! The thresholds below are working defaults, not derived quantities: the
//! only fixed anchor is the 500-iteration burn-in after which personal and
//! neighborhood bests are expected to be frozen.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::clt::nonosc::{fit_log_decay, peak_index, LogBase};
use crate::error::{Error, Result};
use crate::objectives::euclid;
use crate::stats::upper_robust_outliers;
use crate::trajectory::Trajectory;

pub const DEFAULT_BELATED_Z: f64 = 3.5;

/// Minimum population for robust outlier flags.
pub const MIN_BELATED_POPULATION: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Oscillatory,
    Converging,
    Belated,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeConfig {
    pub burn_in: usize,
    pub delta_osc: f64,
    pub delta_conv: f64,
    pub window_w: usize,
    pub belated_z: f64,
    /// Distances at or below this are treated as machine precision.
    pub floor: f64,
    pub log_base: LogBase,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig {
            burn_in: 500,
            delta_osc: 1e-2,
            delta_conv: 1e-3,
            window_w: 100,
            belated_z: DEFAULT_BELATED_Z,
            floor: 1e-12,
            log_base: LogBase::Natural,
        }
    }
}

impl RegimeConfig {
    pub fn validate(&self, iterations: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.burn_in >= iterations {
            problems.push(format!("burn_in {} must be below the iteration count {iterations}", self.burn_in));
        }
        if self.window_w == 0 {
            problems.push("window_w must be >= 1".to_string());
        }
        if !(self.delta_conv > 0.0 && self.delta_osc > 0.0) {
            problems.push("delta thresholds must be positive".to_string());
        }
        if self.delta_conv > self.delta_osc {
            problems.push("delta_conv must not exceed delta_osc".to_string());
        }
        if !(self.floor >= 0.0) {
            problems.push("floor must be >= 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagnationReport {
    pub particle: usize,
    /// Last iteration at which the personal best moved (0 if never).
    pub last_pbest_change: usize,
    pub last_nbest_change: usize,
    /// First iteration from which both bests stay unchanged to the end,
    /// provided that span covers at least `window_w` iterations.
    pub stagnant_since: Option<usize>,
}

/// Last iteration `n ≥ 1` at which `series(n) != series(n − 1)`, else 0.
fn last_change<'a>(n_max: usize, series: impl Fn(usize) -> &'a [f64]) -> usize {
    (1..=n_max).rev().find(|&n| series(n) != series(n - 1)).unwrap_or(0)
}

pub fn detect_stagnation(traj: &Trajectory, particle: usize, window_w: usize) -> Result<StagnationReport> {
    traj.check_particle(particle)?;
    if window_w == 0 {
        return Err(Error::InvalidParams("window_w must be >= 1".into()));
    }
    let n_max = traj.iterations();
    let last_pbest_change = last_change(n_max, |n| traj.pbest(n, particle));
    let last_nbest_change = last_change(n_max, |n| traj.nbest(n, particle));
    let since = last_pbest_change.max(last_nbest_change);
    Ok(StagnationReport {
        particle,
        last_pbest_change,
        last_nbest_change,
        stagnant_since: (n_max - since >= window_w).then_some(since),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub particle: usize,
    pub kind: RegimeKind,
    /// Final personal best.
    pub p: Vec<f64>,
    /// Final neighborhood best.
    pub g: Vec<f64>,
    pub stagnant_since: Option<usize>,
    /// Window over which the attractors are frozen: `(burn_in, N)` when the
    /// particle is stagnant after burn-in.
    pub window: Option<(usize, usize)>,
    /// Slope of `log‖x_n − g‖` over the decay window; set for particles with
    /// `p` and `g` within `delta_conv`.
    pub decay_slope: Option<f64>,
    pub decay_r_squared: Option<f64>,
    pub decay_window: Option<(usize, usize)>,
}

impl RegimeLabel {
    pub fn is_converging(&self) -> bool {
        matches!(self.kind, RegimeKind::Converging | RegimeKind::Belated)
    }
}

/// Label of one particle before population-level belated flags.
fn classify_single(traj: &Trajectory, particle: usize, cfg: &RegimeConfig) -> Result<RegimeLabel> {
    let stag = detect_stagnation(traj, particle, cfg.window_w)?;
    let n_max = traj.iterations();
    let p = traj.pbest(n_max, particle).to_vec();
    let g = traj.nbest(n_max, particle).to_vec();
    let gap = euclid(&p, &g);
    let stagnant = stag.stagnant_since.is_some_and(|n| n <= cfg.burn_in);
    let mut label = RegimeLabel {
        particle,
        kind: RegimeKind::Unclassified,
        p,
        g,
        stagnant_since: stag.stagnant_since,
        window: stagnant.then_some((cfg.burn_in, n_max)),
        decay_slope: None,
        decay_r_squared: None,
        decay_window: None,
    };
    if gap <= cfg.delta_conv {
        let dists = traj.distance_path(particle, &label.g);
        if let Some(fit) = peak_index(&dists, 0).and_then(|lo| fit_log_decay(&dists, lo, cfg.floor, cfg.log_base).ok())
        {
            label.decay_slope = Some(fit.slope);
            label.decay_r_squared = Some(fit.r_squared);
            label.decay_window = Some(fit.window);
        }
    }
    if stagnant {
        if gap > cfg.delta_osc {
            label.kind = RegimeKind::Oscillatory;
        } else if gap <= cfg.delta_conv {
            label.kind = RegimeKind::Converging;
        }
    }
    Ok(label)
}

/// Labels every particle. Converging particles whose decay slope is an upper
/// robust outlier among converging particles (slow decay) become Belated;
/// particles without a decay window are never flagged.
pub fn classify_all(traj: &Trajectory, cfg: &RegimeConfig) -> Result<Vec<RegimeLabel>> {
    cfg.validate(traj.iterations())?;
    let mut labels = (0..traj.swarm_size())
        .map(|s| classify_single(traj, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (ids, slopes): (Vec<usize>, Vec<f64>) = labels
        .iter()
        .filter(|l| l.kind == RegimeKind::Converging)
        .filter_map(|l| l.decay_slope.map(|s| (l.particle, s)))
        .unzip();
    if slopes.len() >= MIN_BELATED_POPULATION {
        for i in upper_robust_outliers(&slopes, cfg.belated_z) {
            labels[ids[i]].kind = RegimeKind::Belated;
        }
    }
    Ok(labels)
}

/// Label of a single particle in the context of its swarm.
pub fn classify(traj: &Trajectory, particle: usize, cfg: &RegimeConfig) -> Result<RegimeLabel> {
    traj.check_particle(particle)?;
    Ok(classify_all(traj, cfg)?.swap_remove(particle))
}

/// Ids whose robust z-score of the log-distance exceeds `threshold_z`.
///
/// Non-finite entries (a particle sitting exactly on `g`) are left out of the
/// median/MAD computation and never flagged.
pub fn flag_belated(log_dists: &[f64], threshold_z: f64) -> Result<BTreeSet<usize>> {
    if log_dists.len() < MIN_BELATED_POPULATION {
        return Err(Error::InsufficientData(format!(
            "belated flags need at least {MIN_BELATED_POPULATION} particles, got {}",
            log_dists.len()
        )));
    }
    let (ids, finite): (Vec<usize>, Vec<f64>) = log_dists
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(i, v)| (i, *v))
        .unzip();
    Ok(upper_robust_outliers(&finite, threshold_z).into_iter().map(|i| ids[i]).collect())
}

/// JSON row of the classification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub particle: usize,
    pub kind: RegimeKind,
    pub p: Vec<f64>,
    pub g: Vec<f64>,
    pub stagnant_since: Option<usize>,
}

impl From<&RegimeLabel> for ClassificationRow {
    fn from(l: &RegimeLabel) -> Self {
        ClassificationRow {
            particle: l.particle,
            kind: l.kind,
            p: l.p.clone(),
            g: l.g.clone(),
            stagnant_since: l.stagnant_since,
        }
    }
}

pub fn classification_report(labels: &[RegimeLabel]) -> Vec<ClassificationRow> {
    labels.iter().map(ClassificationRow::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Objective;
    use crate::swarm::{run, Domain, NoiseModel, ParticleState, PsoParams, SwarmState, TopologySpec};

    fn flat(dim: usize) -> Objective {
        Objective::new("flat", dim, Domain::cube(dim, -1.0, 1.0), |_| 1.0)
    }

    /// Hand-built trajectory: `positions[n][s]`, pbest = nbest = `best[n][s]`.
    fn manual(positions: Vec<Vec<f64>>, best: Vec<Vec<f64>>) -> Trajectory {
        let s = positions[0].len();
        let mut t = Trajectory::with_capacity(0, s, 1, positions.len() - 1);
        for (xs, bs) in positions.iter().zip(&best) {
            let particles = xs
                .iter()
                .zip(bs)
                .map(|(x, b)| ParticleState {
                    x: vec![*x],
                    v: vec![0.0],
                    pbest: vec![*b],
                    pbest_val: 0.0,
                    fx: 0.0,
                })
                .collect();
            let mut st = SwarmState::from_particles(particles, TopologySpec::global(), 0);
            st.nbest = bs.iter().map(|b| vec![*b]).collect();
            t.push_state(&st);
        }
        t
    }

    #[test]
    fn constant_bests_stagnate_from_zero() {
        let mut params = PsoParams::classical(1, Domain::cube(1, -1.0, 1.0), 3, 200, 5);
        params.topology = TopologySpec::global();
        let traj = run(&params, &flat(1)).unwrap();
        let r = detect_stagnation(&traj, 1, 100).unwrap();
        assert_eq!(r.stagnant_since, Some(0));
        assert!(detect_stagnation(&traj, 3, 100).is_err());
    }

    #[test]
    fn change_at_last_iteration_is_not_stagnant() {
        let n = 10;
        let positions = vec![vec![0.0]; n + 1];
        let mut best = vec![vec![0.0]; n + 1];
        best[n] = vec![-1.0];
        let traj = manual(positions, best);
        let r = detect_stagnation(&traj, 0, 1).unwrap();
        assert_eq!(r.last_pbest_change, n);
        assert_eq!(r.stagnant_since, None);
    }

    #[test]
    fn fixed_point_particle_is_converging_without_slope() {
        let mut params = PsoParams::classical(2, Domain::cube(2, -1.0, 1.0), 1, 600, 1);
        params.topology = TopologySpec::global();
        params.velocity_init_factor = 0.0;
        params.noise = NoiseModel::Fixed { r1: 0.5, r2: 0.5 };
        let traj = run(&params, &flat(2)).unwrap();
        let labels = classify_all(&traj, &RegimeConfig::default()).unwrap();
        assert_eq!(labels[0].kind, RegimeKind::Converging);
        assert_eq!(labels[0].decay_slope, None);
    }

    #[test]
    fn belated_flags() {
        assert!(flag_belated(&[1.0; 10], 3.5).unwrap().is_empty());
        let mut v: Vec<f64> = (0..99).map(|i| -40.0 + ((i % 21) as f64 - 10.0) / 10.0).collect();
        v.push(-5.0);
        let flagged = flag_belated(&v, 3.5).unwrap();
        assert_eq!(flagged.into_iter().collect::<Vec<_>>(), vec![99]);
        assert!(flag_belated(&[1.0, 2.0], 3.5).is_err());
        let mut with_zero = v.clone();
        with_zero[0] = f64::NEG_INFINITY;
        assert!(flag_belated(&with_zero, 3.5).unwrap().contains(&99));
    }

    #[test]
    fn config_validation() {
        assert!(RegimeConfig::default().validate(2000).is_ok());
        assert!(RegimeConfig::default().validate(500).is_err());
        let bad = RegimeConfig {
            delta_conv: 0.1,
            ..RegimeConfig::default()
        };
        assert!(bad.validate(2000).is_err());
    }
}
