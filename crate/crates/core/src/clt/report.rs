//! JSON reports for the three limit laws.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::region::ConfidenceRegion;

/// Where the attractors `p`, `g` fed to an estimator came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    /// Final personal / neighborhood bests of the run.
    #[default]
    Plugin,
    /// Registered optima of the objective.
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    T1,
    T2,
    T3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: Theorem,
    pub params: Value,
    pub estimates: Value,
    pub region: Option<ConfidenceRegion>,
    pub mode: EstimateMode,
    pub warnings: Vec<String>,
    /// Hypotheses the numbers rely on but that cannot be checked from data.
    pub assumptions: Vec<String>,
}

impl TheoremReport {
    pub fn new(theorem: Theorem, params: Value, estimates: Value, mode: EstimateMode) -> Self {
        let assumptions = match theorem {
            Theorem::T2 => vec!["ratio chain is Harris recurrent (assumed, not tested)".to_string()],
            _ => Vec::new(),
        };
        TheoremReport {
            theorem,
            params,
            estimates,
            region: None,
            mode,
            warnings: Vec::new(),
            assumptions,
        }
    }

    pub fn with_region(mut self, region: ConfidenceRegion) -> Self {
        self.region = Some(region);
        self
    }

    pub fn with_warnings(mut self, warnings: impl IntoIterator<Item = String>) -> Self {
        self.warnings.extend(warnings);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn serializes_with_theorem_tag() {
        let r = TheoremReport::new(Theorem::T2, json!({"lag_t": 20}), json!({"mu_x": -0.03}), EstimateMode::Known);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["theorem"], "T2");
        assert_eq!(v["mode"], "known");
        assert_eq!(v["assumptions"].as_array().unwrap().len(), 1);
    }
}
