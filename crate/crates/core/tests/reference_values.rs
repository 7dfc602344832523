//! Qualitative and quantitative reference behaviour on the Himmelblau
//! studies: setup sanity, regime shapes, and the orders of magnitude the
//! Monte Carlo studies are expected to reproduce.

mod common;

use swarmclt::experiments::{analyze_nonoscillatory, analyze_oscillatory, run_experiment, Pooled, RunOptions};
use swarmclt::objectives::euclid;
use swarmclt::regime::RegimeKind;
use swarmclt::swarm::{init_swarm, run, run_with_id};
use swarmclt::{Domain, PsoParams, Registry};

use common::load_fixture;

fn near(a: &[f64], b: &[f64], r: f64) -> bool {
    euclid(a, b) <= r
}

#[test]
fn himmelblau_setup() {
    let reg = Registry::with_builtins();
    let f = reg.lookup("himmelblau").unwrap();
    assert_eq!(f.dim(), 2);
    assert_eq!(f.eval(&[3.0, 2.0]), 0.0);
    let params = PsoParams::classical(2, Domain::cube(2, -10.0, 10.0), 200, 2000, 1 << 32);
    let state = init_swarm(&params, f).unwrap();
    assert_eq!(state.swarm_size(), 200);
    assert!(state.particles.iter().all(|p| params.domain.contains(&p.x)));

    let traj = run(&params, f).unwrap();
    let n = traj.iterations();
    let hits = (0..200)
        .filter(|&s| f.known_optima().iter().any(|o| near(traj.pbest(n, s), &o.refined, 1e-2)))
        .count();
    println!("{hits} of 200 personal bests within 1e-2 of a minimum");
    assert!(hits > 0);
}

#[test]
fn oscillating_particles_between_two_minima() {
    let spec = load_fixture("full_osc.json", &[]);
    let reg = Registry::with_builtins();
    let f = reg.lookup("himmelblau").unwrap();
    let traj = run_with_id(&spec.base, f, 0).unwrap();
    let (labels, cohort) = analyze_oscillatory(&traj, f, &spec.analysis, spec.base.omega, spec.base.c).unwrap();
    let [a, b] = spec.analysis.pair.as_ref().unwrap();
    let between = labels
        .iter()
        .filter(|l| l.kind == RegimeKind::Oscillatory)
        .filter(|l| (near(&l.p, a, 0.05) && near(&l.g, b, 0.05)) || (near(&l.p, b, 0.05) && near(&l.g, a, 0.05)))
        .count();
    assert!(between > 0);
    assert_eq!(between, cohort.len());

    let fractions: Vec<f64> = cohort.iter().map(|o| o.running_inside).collect();
    let best = fractions.iter().cloned().fold(0.0, f64::max);
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    println!("running H1 inside the 85% ellipse: mean {mean:.3}, best {best:.3} over {} particles", fractions.len());
    // A single trajectory can sit inside the ellipse almost all the time.
    assert!(best >= 0.95);
}

/// Last iteration at which the personal or neighborhood best moved.
fn last_attractor_change(traj: &swarmclt::Trajectory, s: usize) -> usize {
    (1..=traj.iterations())
        .rev()
        .find(|&n| traj.pbest(n, s) != traj.pbest(n - 1, s) || traj.nbest(n, s) != traj.nbest(n - 1, s))
        .unwrap_or(0)
}

#[test]
fn converging_particles_stagnate_early() {
    let spec = load_fixture("full_nonosc.json", &[]);
    let reg = Registry::with_builtins();
    let f = reg.lookup("himmelblau").unwrap();
    let traj = run_with_id(&spec.base, f, 0).unwrap();
    let (labels, cohort, _, _) = analyze_nonoscillatory(&traj, f, &spec.analysis).unwrap();
    let target = [3.0, 2.0];
    // Every particle that ends at (3,2), whatever its label, so that the
    // burn-in requirement of the classifier does not decide the outcome.
    let to_target: Vec<_> = labels
        .iter()
        .filter(|l| near(&l.p, &target, 1e-3) && near(&l.g, &target, 1e-3))
        .collect();
    let early = (0..traj.swarm_size())
        .filter(|&s| to_target.iter().any(|l| l.particle == s))
        .filter(|&s| last_attractor_change(&traj, s) < 500)
        .count();
    println!("{early} of {} particles converging to (3,2) stagnate before iteration 500", to_target.len());
    assert!(early * 2 > to_target.len());
    // Cohort of the same order as the ≈240 particles of the reference study.
    assert!((120..=480).contains(&cohort.len()), "cohort {}", cohort.len());
}

#[test]
fn oscillatory_study_at_full_scale() {
    let spec = load_fixture("full_osc.json", &[]);
    let res = run_experiment(&spec, &Registry::with_builtins(), RunOptions::default(), &[]).unwrap();
    let Pooled::Oscillatory(p) = &res.pooled else { panic!("oscillatory result expected") };
    println!(
        "M=200: cohort {}, ellipse coverage {:.4}, qq {:.4} / {:.4}",
        p.cohort_size,
        p.ellipse_coverage,
        res.qq_corr("h1_0").unwrap(),
        res.qq_corr("h1_1").unwrap()
    );
    // Order of 10³ oscillating particles; coverage "almost 95%".
    assert!((500..=2300).contains(&p.cohort_size));
    assert!((0.92..=0.97).contains(&p.ellipse_coverage));
}

#[test]
fn nonoscillatory_reference_values() {
    let spec = load_fixture("full_nonosc.json", &[]);
    let res = run_experiment(&spec, &Registry::with_builtins(), RunOptions::default(), &[]).unwrap();
    let Pooled::NonOscillatory(p) = &res.pooled else { panic!("non-oscillatory result expected") };
    println!("mu {:.4}, sigma {:.4}, floor reached at {:.0}", p.mu_x, p.sigma_x, p.median_floor_iteration);
    // Machine precision is reached after roughly 300 iterations.
    assert!((150.0..=600.0).contains(&p.median_floor_iteration));
}
