//! Test objectives with registered minima.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::swarm::Domain;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A known minimizer. `reported` holds the customary rounded coordinates;
/// `refined` the value polished by a high-precision Newton solve, which is
/// what the estimators use in known-target mode.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub reported: Vec<f64>,
    pub refined: Vec<f64>,
    pub value: f64,
}

#[derive(Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    eval: EvalFn,
    known_optima: Vec<KnownOptimum>,
    default_domain: Domain,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("known_optima", &self.known_optima)
            .finish_non_exhaustive()
    }
}

impl Objective {
    pub fn new<F>(name: impl Into<String>, dim: usize, domain: Domain, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Objective {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            known_optima: Vec::new(),
            default_domain: domain,
        }
    }

    pub fn with_optimum(mut self, reported: Vec<f64>, refined: Vec<f64>, value: f64) -> Self {
        self.known_optima.push(KnownOptimum {
            reported,
            refined,
            value,
        });
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn known_optima(&self) -> &[KnownOptimum] {
        &self.known_optima
    }

    pub fn default_domain(&self) -> &Domain {
        &self.default_domain
    }

    /// The registered optimum closest to `point`, if one lies within `radius`.
    pub fn nearest_optimum(&self, point: &[f64], radius: f64) -> Option<&KnownOptimum> {
        self.known_optima
            .iter()
            .map(|o| (o, euclid(&o.refined, point)))
            .filter(|(_, d)| *d <= radius)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(o, _)| o)
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `(x² + y - 11)² + (x + y² - 7)²`
pub fn himmelblau(point: &[f64]) -> f64 {
    let (x, y) = (point[0], point[1]);
    let a = x * x + y - 11.0;
    let b = x + y * y - 7.0;
    a * a + b * b
}

pub fn sphere(point: &[f64]) -> f64 {
    point.iter().map(|x| x * x).sum()
}

/// `Σ (k+1) (x_k - c_k)²` with centers alternating `1, -1, 1, ...`.
pub fn separable_quadratic(point: &[f64]) -> f64 {
    point
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let center = if k % 2 == 0 { 1.0 } else { -1.0 };
            (k as f64 + 1.0) * (x - center) * (x - center)
        })
        .sum()
}

// Refined by Newton iteration at 40 significant digits.
const HIMMELBLAU_MINIMA: [([f64; 2], [f64; 2]); 4] = [
    ([3.0, 2.0], [3.0, 2.0]),
    ([-2.81, 3.13], [-2.805_118_086_952_745, 3.131_312_518_250_573]),
    ([-3.77, -3.28], [-3.779_310_253_377_747, -3.283_185_991_286_169_4]),
    ([3.58, -1.84], [3.584_428_340_330_491_7, -1.848_126_526_964_403_6]),
];

pub fn himmelblau_objective() -> Objective {
    let mut obj = Objective::new("himmelblau", 2, Domain::cube(2, -10.0, 10.0), himmelblau);
    for (reported, refined) in HIMMELBLAU_MINIMA {
        obj = obj.with_optimum(reported.to_vec(), refined.to_vec(), 0.0);
    }
    obj
}

/// Objectives addressable by name.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    objectives: BTreeMap<String, Objective>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    /// Himmelblau, the 2-d sphere and a 2-d separable quadratic.
    pub fn with_builtins() -> Self {
        let mut reg = Registry::new();
        let builtins = [
            himmelblau_objective(),
            Objective::new("sphere", 2, Domain::cube(2, -10.0, 10.0), sphere).with_optimum(
                vec![0.0, 0.0],
                vec![0.0, 0.0],
                0.0,
            ),
            Objective::new("quadratic", 2, Domain::cube(2, -10.0, 10.0), separable_quadratic)
                .with_optimum(vec![1.0, -1.0], vec![1.0, -1.0], 0.0),
        ];
        for obj in builtins {
            reg.register(obj).expect("builtin names are unique");
        }
        reg
    }

    pub fn register(&mut self, obj: Objective) -> Result<&Objective> {
        if self.objectives.contains_key(obj.name()) {
            return Err(Error::DuplicateObjective(obj.name().to_string()));
        }
        let name = obj.name().to_string();
        Ok(self.objectives.entry(name).or_insert(obj))
    }

    pub fn lookup(&self, name: &str) -> Result<&Objective> {
        self.objectives
            .get(name)
            .ok_or_else(|| Error::ObjectiveNotFound(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.objectives.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn himmelblau_values() {
        assert_eq!(himmelblau(&[3.0, 2.0]), 0.0);
        assert_eq!(himmelblau(&[0.0, 0.0]), 170.0);
        assert!(himmelblau(&[-2.805118, 3.131312]) < 1e-10);
    }

    #[test]
    fn refined_minima_are_tight() {
        let f = himmelblau_objective();
        for o in f.known_optima() {
            assert!(f.eval(&o.refined) < 1e-25, "{:?}", o.refined);
            assert!(euclid(&o.refined, &o.reported) < 0.01);
        }
    }

    #[test]
    fn registry_lookup() {
        let mut reg = Registry::new();
        reg.register(Objective::new("sphere", 2, Domain::cube(2, -1.0, 1.0), sphere))
            .unwrap();
        assert_eq!(reg.lookup("sphere").unwrap().eval(&[1.0, 1.0]), 2.0);
        assert!(matches!(
            reg.register(Objective::new("sphere", 2, Domain::cube(2, -1.0, 1.0), sphere)),
            Err(Error::DuplicateObjective(_))
        ));

        let reg = Registry::with_builtins();
        assert_eq!(reg.lookup("himmelblau").unwrap().dim(), 2);
        assert!(matches!(reg.lookup("missing"), Err(Error::ObjectiveNotFound(_))));
    }

    #[test]
    fn optima_are_local_minima_and_in_domain() {
        let reg = Registry::with_builtins();
        for name in reg.names() {
            let f = reg.lookup(name).unwrap();
            for o in f.known_optima() {
                assert!(f.default_domain().contains(&o.refined));
                let base = f.eval(&o.refined);
                for k in 0..f.dim() {
                    for sign in [-1.0, 1.0] {
                        let mut p = o.refined.clone();
                        p[k] += sign * 1e-3;
                        assert!(base <= f.eval(&p), "{name} axis {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn nearest_optimum_snaps_rounded_points() {
        let f = himmelblau_objective();
        let o = f.nearest_optimum(&[3.58, -1.84], 0.05).unwrap();
        assert_eq!(o.reported, vec![3.58, -1.84]);
        assert!(f.nearest_optimum(&[0.0, 0.0], 0.05).is_none());
    }
}
