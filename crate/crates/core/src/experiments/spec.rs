//! Experiment specifications: JSON files describing a Monte Carlo study.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::clt::nonosc::{LagWeights, LogBase, RegionForm};
use crate::clt::report::EstimateMode;
use crate::error::{Error, Result};
use crate::regime::RegimeConfig;
use crate::swarm::PsoParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Oscillatory,
    NonOscillatory,
    SwarmFixedStep,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_lag() -> usize {
    20
}
fn default_cohort_radius() -> f64 {
    0.05
}

/// Analysis settings. Fields unused by a given kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub kind: AnalysisKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub mode: EstimateMode,
    /// Regime thresholds: burn-in, stagnation window, distance thresholds,
    /// distance floor, belated z-score and log base.
    #[serde(default, flatten)]
    pub regime: RegimeConfig,
    /// Truncation lag of the long-run variance.
    #[serde(default = "default_lag")]
    pub lag_t: usize,
    #[serde(default)]
    pub lag_weights: LagWeights,
    /// Iteration at which the fixed-step statistics are evaluated.
    #[serde(default)]
    pub fixed_n: Option<usize>,
    /// Optimum the converging cohort must reach.
    #[serde(default)]
    pub target: Option<Vec<f64>>,
    /// Pair of attractors selecting the oscillating cohort (either order).
    #[serde(default)]
    pub pair: Option<[Vec<f64>; 2]>,
    /// Distance within which a final best counts as reaching a target or
    /// pair point, and within which reported optima snap to refined ones.
    #[serde(default = "default_cohort_radius")]
    pub cohort_radius: f64,
    /// Coordinate used by the scalar non-oscillatory and swarm analyses.
    #[serde(default)]
    pub coord: usize,
    #[serde(default)]
    pub region_form: RegionForm,
    #[serde(default)]
    pub write_svg: bool,
}

impl AnalysisParams {
    pub fn log_base(&self) -> LogBase {
        self.regime.log_base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub objective: String,
    pub base: PsoParams,
    pub replications: usize,
    pub analysis: AnalysisParams,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_value(value: Value) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_value(value)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    /// Reads a spec file and applies `key=value` overrides before validation.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: Value = serde_json::from_str(&text)?;
        apply_overrides(&mut value, overrides)?;
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let a = &self.analysis;
        let mut problems = Vec::new();
        if self.replications == 0 {
            problems.push("replications must be >= 1".to_string());
        }
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            problems.push(format!("alpha must lie in (0,1), got {}", a.alpha));
        }
        if a.coord >= self.base.dim {
            problems.push(format!("coord {} out of range for dimension {}", a.coord, self.base.dim));
        }
        if let Some(t) = &a.target {
            if t.len() != self.base.dim {
                problems.push("target dimension differs from the search space".to_string());
            }
        }
        if let Some(pair) = &a.pair {
            if pair.iter().any(|p| p.len() != self.base.dim) {
                problems.push("pair points must match the search-space dimension".to_string());
            }
        }
        match a.kind {
            AnalysisKind::Oscillatory => {
                if let Err(e) = a.regime.validate(self.base.iterations) {
                    problems.push(e.to_string());
                }
            }
            AnalysisKind::NonOscillatory => {
                if let Err(e) = a.regime.validate(self.base.iterations) {
                    problems.push(e.to_string());
                }
                if a.target.is_none() {
                    problems.push("non-oscillatory analysis needs a target optimum".to_string());
                }
                if let Some(n) = a.fixed_n {
                    if n == 0 || n > self.base.iterations {
                        problems.push(format!("fixed_n {n} must lie in 1..={}", self.base.iterations));
                    }
                }
            }
            AnalysisKind::SwarmFixedStep => {
                match a.fixed_n {
                    None => problems.push("swarm analysis needs fixed_n".to_string()),
                    Some(n) if n == 0 || n > self.base.iterations => {
                        problems.push(format!("fixed_n {n} must lie in 1..={}", self.base.iterations))
                    }
                    _ => {}
                }
                if a.target.is_none() {
                    problems.push("swarm analysis needs a target optimum".to_string());
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// SHA-256 of the canonical JSON form of the spec.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Applies `dotted.key=value` assignments to a JSON document. Values parse as
/// JSON when possible and fall back to plain strings; missing intermediate
/// objects are created.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("override `{item}` is not key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::InvalidParams(format!("override `{item}` has an empty key")));
        }
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::InvalidParams(format!("override `{key}`: `{part}` is not inside an object")))?;
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::InvalidParams(format!("override `{key}` does not address an object field")))?;
        obj.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}
