//! The PSO state machine.
//!
//! One iteration moves every particle with
//!
//! ```text
//! v[n+1] = ω v[n] + c r1 ⊙ (p[n] - x[n]) + c r2 ⊙ (g[n] - x[n])
//! x[n+1] = x[n] + v[n+1]
//! ```
//!
//! using the same acceleration `c` for the cognitive and social terms, then
//! refreshes personal and neighborhood bests. There is no boundary handling:
//! particles may leave the search box and are only counted.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::rng::{swarm_rng, SwarmRng};
use crate::trajectory::Trajectory;

/// Axis-aligned box `∏ [lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Domain {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    pub fn width(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Global,
    #[default]
    Ring,
}

/// Communication graph of the swarm.
///
/// A ring neighborhood holds the particle itself plus `ring_k` particles on
/// each side of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    #[serde(default = "default_ring_k")]
    pub ring_k: usize,
}

fn default_ring_k() -> usize {
    1
}

impl Default for TopologySpec {
    fn default() -> Self {
        TopologySpec::ring(1)
    }
}

impl TopologySpec {
    pub fn global() -> Self {
        TopologySpec {
            kind: TopologyKind::Global,
            ring_k: 1,
        }
    }

    pub fn ring(k: usize) -> Self {
        TopologySpec {
            kind: TopologyKind::Ring,
            ring_k: k,
        }
    }
}

/// How the uniform multipliers `r1`, `r2` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    /// Independent U[0,1] draws per coordinate.
    #[default]
    Uniform,
    /// Constant multipliers; `r1 = r2 = 0.5` switches the noise off.
    Fixed { r1: f64, r2: f64 },
}

fn default_velocity_factor() -> f64 {
    0.5
}

/// Parameters of one swarm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    /// Inertia weight ω.
    pub omega: f64,
    /// Shared acceleration coefficient c = c1 = c2.
    pub c: f64,
    pub swarm_size: usize,
    pub iterations: usize,
    pub dim: usize,
    pub domain: Domain,
    #[serde(default)]
    pub topology: TopologySpec,
    pub seed: u64,
    /// Initial velocities are uniform on `±factor · (hi_k - lo_k)`.
    #[serde(default = "default_velocity_factor")]
    pub velocity_init_factor: f64,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl PsoParams {
    /// The constriction calibration used throughout the Himmelblau studies.
    pub const CLASSICAL_OMEGA: f64 = 0.72984;
    pub const CLASSICAL_C: f64 = 1.496172;

    pub fn classical(dim: usize, domain: Domain, swarm_size: usize, iterations: usize, seed: u64) -> Self {
        PsoParams {
            omega: Self::CLASSICAL_OMEGA,
            c: Self::CLASSICAL_C,
            swarm_size,
            iterations,
            dim,
            domain,
            topology: TopologySpec::ring(1),
            seed,
            velocity_init_factor: default_velocity_factor(),
            noise: NoiseModel::Uniform,
        }
    }

    /// Checks every parameter invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.omega > 0.0 && self.omega < 1.0) {
            problems.push(format!("omega must lie in (0,1), got {}", self.omega));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            problems.push(format!("c must be positive, got {}", self.c));
        }
        if self.swarm_size < 1 {
            problems.push("swarm_size must be at least 1".to_string());
        }
        if self.dim < 1 {
            problems.push("dim must be at least 1".to_string());
        }
        if self.domain.lo.len() != self.dim || self.domain.hi.len() != self.dim {
            problems.push(format!(
                "domain has {}/{} bounds for dim {}",
                self.domain.lo.len(),
                self.domain.hi.len(),
                self.dim
            ));
        } else {
            for k in 0..self.dim {
                let (lo, hi) = (self.domain.lo[k], self.domain.hi[k]);
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    problems.push(format!("domain axis {k}: need lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        if self.topology.kind == TopologyKind::Ring {
            if self.topology.ring_k < 1 {
                problems.push("ring_k must be at least 1".to_string());
            } else if 2 * self.topology.ring_k + 1 > self.swarm_size {
                problems.push(format!(
                    "ring_k = {} needs at least {} particles, swarm has {}",
                    self.topology.ring_k,
                    2 * self.topology.ring_k + 1,
                    self.swarm_size
                ));
            }
        }
        if !(self.velocity_init_factor >= 0.0 && self.velocity_init_factor.is_finite()) {
            problems.push(format!(
                "velocity_init_factor must be non-negative, got {}",
                self.velocity_init_factor
            ));
        }
        if let NoiseModel::Fixed { r1, r2 } = self.noise {
            if !(0.0..=1.0).contains(&r1) || !(0.0..=1.0).contains(&r2) {
                problems.push(format!("fixed noise must lie in [0,1], got r1={r1}, r2={r2}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }
}

/// Uniform multipliers for one particle at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl NoiseDraw {
    pub fn sample(rng: &mut SwarmRng, dim: usize) -> Self {
        let r1 = (0..dim).map(|_| rng.random::<f64>()).collect();
        let r2 = (0..dim).map(|_| rng.random::<f64>()).collect();
        NoiseDraw { r1, r2 }
    }

    pub fn fixed(dim: usize, r1: f64, r2: f64) -> Self {
        NoiseDraw {
            r1: vec![r1; dim],
            r2: vec![r2; dim],
        }
    }

    /// `r1 + r2 - 1`, triangular on [-1, 1].
    pub fn eps(&self) -> Vec<f64> {
        self.r1.iter().zip(&self.r2).map(|(a, b)| a + b - 1.0).collect()
    }

    /// `r1 - r2`, triangular on [-1, 1] and uncorrelated with `eps`.
    pub fn eta(&self) -> Vec<f64> {
        self.r1.iter().zip(&self.r2).map(|(a, b)| a - b).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub pbest: Vec<f64>,
    pub pbest_val: f64,
    /// Objective value at `x`.
    pub fx: f64,
}

impl ParticleState {
    /// A particle whose personal best is its current position.
    pub fn at(x: Vec<f64>, v: Vec<f64>, fx: f64) -> Self {
        ParticleState {
            pbest: x.clone(),
            pbest_val: fx,
            x,
            v,
            fx,
        }
    }
}

/// Velocity then position update of one particle, in place.
pub fn advance_particle(particle: &mut ParticleState, nbest: &[f64], draw: &NoiseDraw, omega: f64, c: f64) {
    for k in 0..particle.x.len() {
        let x = particle.x[k];
        let v = omega * particle.v[k]
            + c * draw.r1[k] * (particle.pbest[k] - x)
            + c * draw.r2[k] * (nbest[k] - x);
        particle.v[k] = v;
        particle.x[k] = x + v;
    }
}

/// Second-order form of the update:
///
/// `x[n+1] = (1+ω) x[n] - ω x[n-1] + c (r1+r2) ⊙ ((p+g)/2 - x[n]) + c (r1-r2) ⊙ (p-g)/2`
///
/// Algebraically identical to [`advance_particle`] when `v[n] = x[n] - x[n-1]`;
/// kept as an independent cross-check.
pub fn single_line_form(
    x_n: &[f64],
    x_prev: &[f64],
    p: &[f64],
    g: &[f64],
    draw: &NoiseDraw,
    omega: f64,
    c: f64,
) -> Vec<f64> {
    (0..x_n.len())
        .map(|k| {
            let sum = draw.r1[k] + draw.r2[k];
            let diff = draw.r1[k] - draw.r2[k];
            (1.0 + omega) * x_n[k] - omega * x_prev[k]
                + c * sum * (0.5 * (p[k] + g[k]) - x_n[k])
                + c * diff * 0.5 * (p[k] - g[k])
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<ParticleState>,
    pub iter: usize,
    pub nbest: Vec<Vec<f64>>,
    pub nbest_val: Vec<f64>,
    /// Number of (particle, step) events with the particle outside the domain.
    pub exits: u64,
    rng: SwarmRng,
}

impl SwarmState {
    /// Builds a state from explicit particles; neighborhood bests are
    /// computed from the topology.
    pub fn from_particles(particles: Vec<ParticleState>, topology: TopologySpec, seed: u64) -> Self {
        let mut state = SwarmState {
            nbest: Vec::new(),
            nbest_val: Vec::new(),
            particles,
            iter: 0,
            exits: 0,
            rng: swarm_rng(seed),
        };
        state.init_nbest(topology);
        state
    }

    pub fn swarm_size(&self) -> usize {
        self.particles.len()
    }

    /// SHA-256 over every float bit pattern, the iteration counter and the
    /// generator position.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.iter as u64).to_le_bytes());
        h.update(self.exits.to_le_bytes());
        for p in &self.particles {
            for v in [&p.x, &p.v, &p.pbest] {
                for x in v.iter() {
                    h.update(x.to_bits().to_le_bytes());
                }
            }
            h.update(p.pbest_val.to_bits().to_le_bytes());
        }
        for g in &self.nbest {
            for x in g {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.update(self.rng.get_word_pos().to_le_bytes());
        let mut s = String::with_capacity(64);
        for b in h.finalize() {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    fn init_nbest(&mut self, topology: TopologySpec) {
        let n = self.particles.len();
        self.nbest = Vec::with_capacity(n);
        self.nbest_val = Vec::with_capacity(n);
        for s in 0..n {
            let j = best_neighbor(&self.particles, topology, s);
            self.nbest.push(self.particles[j].pbest.clone());
            self.nbest_val.push(self.particles[j].pbest_val);
        }
    }

    /// Replaces a neighborhood best only on strict improvement.
    fn update_nbest(&mut self, topology: TopologySpec) {
        match topology.kind {
            TopologyKind::Global => {
                let j = best_neighbor(&self.particles, topology, 0);
                let (val, pos) = (self.particles[j].pbest_val, &self.particles[j].pbest);
                for s in 0..self.particles.len() {
                    if val < self.nbest_val[s] {
                        self.nbest_val[s] = val;
                        self.nbest[s].clone_from(pos);
                    }
                }
            }
            TopologyKind::Ring => {
                for s in 0..self.particles.len() {
                    let j = best_neighbor(&self.particles, topology, s);
                    let val = self.particles[j].pbest_val;
                    if val < self.nbest_val[s] {
                        self.nbest_val[s] = val;
                        self.nbest[s].clone_from(&self.particles[j].pbest);
                    }
                }
            }
        }
    }
}

/// Index of the best personal best in the neighborhood of `s`. Ties go to the
/// first candidate in scan order (offsets `-k..=k` for a ring, ascending
/// index for the global topology).
fn best_neighbor(particles: &[ParticleState], topology: TopologySpec, s: usize) -> usize {
    let n = particles.len();
    let mut best = usize::MAX;
    let mut best_val = f64::INFINITY;
    let mut consider = |j: usize| {
        let val = particles[j].pbest_val;
        if best == usize::MAX || val < best_val {
            best = j;
            best_val = val;
        }
    };
    match topology.kind {
        TopologyKind::Global => (0..n).for_each(&mut consider),
        TopologyKind::Ring => {
            let k = topology.ring_k.min(n / 2) as isize;
            for off in -k..=k {
                consider((s as isize + off).rem_euclid(n as isize) as usize);
            }
        }
    }
    best
}

fn evaluate(f: &Objective, particle: usize, x: &[f64]) -> Result<f64> {
    let fx = f.eval(x);
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(Error::NonFiniteObjective {
            particle,
            position: x.to_vec(),
        })
    }
}

/// Random positions on the domain and random velocities; every particle
/// starts as its own personal best.
pub fn init_swarm(params: &PsoParams, f: &Objective) -> Result<SwarmState> {
    params.validate()?;
    if f.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: params.dim,
        });
    }
    let mut rng = swarm_rng(params.seed);
    let d = params.dim;
    let mut particles = Vec::with_capacity(params.swarm_size);
    for s in 0..params.swarm_size {
        let x: Vec<f64> = (0..d)
            .map(|k| params.domain.lo[k] + params.domain.width(k) * rng.random::<f64>())
            .collect();
        let v: Vec<f64> = (0..d)
            .map(|k| {
                let span = params.velocity_init_factor * params.domain.width(k);
                span * (2.0 * rng.random::<f64>() - 1.0)
            })
            .collect();
        let fx = evaluate(f, s, &x)?;
        particles.push(ParticleState::at(x, v, fx));
    }
    let mut state = SwarmState {
        particles,
        iter: 0,
        nbest: Vec::new(),
        nbest_val: Vec::new(),
        exits: 0,
        rng,
    };
    state.init_nbest(params.topology);
    Ok(state)
}

/// One synchronous iteration: every particle moves with fresh noise, then
/// personal bests (strict improvement only) and neighborhood bests update.
pub fn step(state: &mut SwarmState, params: &PsoParams, f: &Objective) -> Result<()> {
    let d = state.particles.first().map_or(0, |p| p.x.len());
    let mut draw = NoiseDraw::fixed(d, 0.0, 0.0);
    for s in 0..state.particles.len() {
        match params.noise {
            NoiseModel::Uniform => {
                for k in 0..d {
                    draw.r1[k] = state.rng.random::<f64>();
                }
                for k in 0..d {
                    draw.r2[k] = state.rng.random::<f64>();
                }
            }
            NoiseModel::Fixed { r1, r2 } => {
                draw.r1.fill(r1);
                draw.r2.fill(r2);
            }
        }
        let particle = &mut state.particles[s];
        advance_particle(particle, &state.nbest[s], &draw, params.omega, params.c);
        let fx = evaluate(f, s, &particle.x)?;
        particle.fx = fx;
        if fx < particle.pbest_val {
            particle.pbest_val = fx;
            particle.pbest.clone_from(&particle.x);
        }
        if !params.domain.contains(&particle.x) {
            state.exits += 1;
        }
    }
    state.update_nbest(params.topology);
    state.iter += 1;
    Ok(())
}

/// Runs `params.iterations` steps from a fresh swarm and records all of it.
pub fn run(params: &PsoParams, f: &Objective) -> Result<Trajectory> {
    run_with_id(params, f, 0)
}

pub fn run_with_id(params: &PsoParams, f: &Objective, run_id: u64) -> Result<Trajectory> {
    let mut state = init_swarm(params, f)?;
    let mut traj = Trajectory::with_capacity(run_id, params.swarm_size, params.dim, params.iterations);
    traj.push_state(&state);
    for _ in 0..params.iterations {
        step(&mut state, params, f)?;
        traj.push_state(&state);
    }
    traj.set_exits(state.exits);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Registry;

    fn himmelblau() -> Objective {
        Registry::with_builtins().lookup("himmelblau").unwrap().clone()
    }

    fn params(s: usize, n: usize, seed: u64) -> PsoParams {
        PsoParams::classical(2, Domain::cube(2, -10.0, 10.0), s, n, seed)
    }

    #[test]
    fn init_is_deterministic() {
        let f = himmelblau();
        let a = init_swarm(&params(20, 5, 42), &f).unwrap();
        let b = init_swarm(&params(20, 5, 42), &f).unwrap();
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn single_particle_is_its_own_neighborhood() {
        let f = himmelblau();
        let mut p = params(1, 5, 3);
        p.topology = TopologySpec::global();
        let st = init_swarm(&p, &f).unwrap();
        assert_eq!(st.nbest[0], st.particles[0].pbest);
    }

    #[test]
    fn initial_positions_inside_domain() {
        let f = himmelblau();
        let p = params(200, 1, 9);
        let st = init_swarm(&p, &f).unwrap();
        assert_eq!(st.particles.len(), 200);
        assert!(st.particles.iter().all(|q| p.domain.contains(&q.x)));
        assert!(st
            .particles
            .iter()
            .all(|q| q.v.iter().all(|v| v.abs() <= 0.5 * 20.0)));
    }

    #[test]
    fn validation_lists_every_violation() {
        let mut p = params(2, 5, 0);
        p.omega = 1.5;
        p.c = -1.0;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("omega"), "{msg}");
        assert!(msg.contains("c must"), "{msg}");
        assert!(msg.contains("ring_k"), "{msg}");
    }

    #[test]
    fn zero_coefficients_freeze_position() {
        let f = himmelblau();
        let mut p = params(5, 1, 1);
        let mut st = init_swarm(&p, &f).unwrap();
        p.omega = 0.0;
        p.c = 0.0;
        let before: Vec<Vec<f64>> = st.particles.iter().map(|q| q.x.clone()).collect();
        step(&mut st, &p, &f).unwrap();
        for (q, x0) in st.particles.iter().zip(before) {
            assert_eq!(q.x, x0);
            assert!(q.v.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fixed_point_stays_put() {
        let f = himmelblau();
        let x = vec![3.0, 2.0];
        let particles = vec![ParticleState::at(x.clone(), vec![0.0, 0.0], 0.0)];
        let mut st = SwarmState::from_particles(particles, TopologySpec::global(), 0);
        let mut p = params(1, 1, 0);
        p.topology = TopologySpec::global();
        step(&mut st, &p, &f).unwrap();
        assert_eq!(st.particles[0].x, x);
    }

    #[test]
    fn hand_evaluated_update() {
        // v = 0.5*0.2 + 1*0.5*(0-1) + 1*0.5*(2-1) = 0.1, x = 1.1
        let mut q = ParticleState {
            x: vec![1.0],
            v: vec![0.2],
            pbest: vec![0.0],
            pbest_val: 0.0,
            fx: 1.0,
        };
        advance_particle(&mut q, &[2.0], &NoiseDraw::fixed(1, 0.5, 0.5), 0.5, 1.0);
        assert!((q.v[0] - 0.1).abs() < 1e-15);
        assert!((q.x[0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn single_line_reduces_when_p_equals_g() {
        let draw = NoiseDraw {
            r1: vec![0.3, 0.9],
            r2: vec![0.6, 0.2],
        };
        let (omega, c) = (0.7, 1.4);
        let x = [1.0, -2.0];
        let xp = [0.5, -1.0];
        let p = [0.2, 0.4];
        let got = single_line_form(&x, &xp, &p, &p, &draw, omega, c);
        for k in 0..2 {
            let want = (1.0 + omega) * x[k] - omega * xp[k] + c * (draw.r1[k] + draw.r2[k]) * (p[k] - x[k]);
            assert!((got[k] - want).abs() < 1e-14);
        }
        let frozen = single_line_form(&x, &x, &p, &p, &draw, 0.0, 0.0);
        assert_eq!(frozen, x.to_vec());
    }

    #[test]
    fn non_finite_objective_aborts_with_particle() {
        let f = Objective::new("nan_far", 1, Domain::cube(1, -1.0, 1.0), |x: &[f64]| {
            if x[0].abs() > 0.5 {
                f64::NAN
            } else {
                x[0] * x[0]
            }
        });
        let particles = vec![ParticleState::at(vec![0.0], vec![2.0], 0.0)];
        let mut st = SwarmState::from_particles(particles, TopologySpec::global(), 0);
        let mut p = PsoParams::classical(1, Domain::cube(1, -1.0, 1.0), 1, 1, 0);
        p.topology = TopologySpec::global();
        match step(&mut st, &p, &f) {
            Err(Error::NonFiniteObjective { particle, position }) => {
                assert_eq!(particle, 0);
                assert_eq!(position.len(), 1);
            }
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn ring_neighborhood_includes_self() {
        let f = himmelblau();
        let st = init_swarm(&params(10, 1, 5), &f).unwrap();
        for s in 0..10 {
            let left = (s + 9) % 10;
            let right = (s + 1) % 10;
            let best = [left, s, right]
                .iter()
                .map(|&j| st.particles[j].pbest_val)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(st.nbest_val[s], best);
        }
    }

    #[test]
    fn exits_are_counted_not_clamped() {
        let f = Objective::new("flat", 1, Domain::cube(1, -1.0, 1.0), |_: &[f64]| 1.0);
        let particles = vec![ParticleState::at(vec![0.9], vec![5.0], 1.0)];
        let mut st = SwarmState::from_particles(particles, TopologySpec::global(), 0);
        let mut p = PsoParams::classical(1, Domain::cube(1, -1.0, 1.0), 1, 1, 0);
        p.topology = TopologySpec::global();
        p.noise = NoiseModel::Fixed { r1: 0.5, r2: 0.5 };
        step(&mut st, &p, &f).unwrap();
        assert!(st.particles[0].x[0] > 1.0);
        assert_eq!(st.exits, 1);
    }
}
