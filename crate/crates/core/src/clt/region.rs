//! Confidence regions produced by the three limit theorems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper || lower.is_nan() || upper.is_nan());
        Interval { lower, upper }
    }

    pub fn centered(center: f64, half_width: f64) -> Self {
        Interval::new(center - half_width, center + half_width)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lower <= t && t <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }
}

/// Shape of a confidence region.
///
/// The ellipsoid is stored with its diagonal precision `N·Γ⁻¹`, so membership
/// reads `Σ_ℓ precision_ℓ (t_ℓ - center_ℓ)² ≤ radius2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionShape {
    /// Axis-aligned box, one interval per coordinate.
    Interval { bounds: Vec<Interval> },
    Ellipsoid {
        center: Vec<f64>,
        precision_diag: Vec<f64>,
        radius2: f64,
    },
    /// Union of two scalar intervals mirrored about a point.
    TwoSidedUnion { plus: Interval, minus: Interval },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    /// Nominal coverage `1 - α`.
    pub level: f64,
    #[serde(flatten)]
    pub shape: RegionShape,
}

impl ConfidenceRegion {
    pub fn dim(&self) -> usize {
        match &self.shape {
            RegionShape::Interval { bounds } => bounds.len(),
            RegionShape::Ellipsoid { center, .. } => center.len(),
            RegionShape::TwoSidedUnion { .. } => 1,
        }
    }

    /// Membership test; `t` must have the region's dimension.
    pub fn contains(&self, t: &[f64]) -> Result<bool> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.len(),
            });
        }
        Ok(match &self.shape {
            RegionShape::Interval { bounds } => bounds.iter().zip(t).all(|(b, &x)| b.contains(x)),
            RegionShape::Ellipsoid { .. } => self.quadratic_form(t)? <= self.radius2(),
            RegionShape::TwoSidedUnion { plus, minus } => plus.contains(t[0]) || minus.contains(t[0]),
        })
    }

    /// Ellipsoid quadratic form at `t`; errors for other shapes.
    pub fn quadratic_form(&self, t: &[f64]) -> Result<f64> {
        match &self.shape {
            RegionShape::Ellipsoid {
                center,
                precision_diag,
                ..
            } => {
                if t.len() != center.len() {
                    return Err(Error::DimensionMismatch {
                        expected: center.len(),
                        got: t.len(),
                    });
                }
                Ok(t.iter()
                    .zip(center)
                    .zip(precision_diag)
                    .map(|((x, m), w)| w * (x - m).powi(2))
                    .sum())
            }
            _ => Err(Error::InvalidParams("quadratic form is only defined for ellipsoids".into())),
        }
    }

    fn radius2(&self) -> f64 {
        match &self.shape {
            RegionShape::Ellipsoid { radius2, .. } => *radius2,
            _ => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_box_membership() {
        let r = ConfidenceRegion {
            level: 0.95,
            shape: RegionShape::Interval {
                bounds: vec![Interval::new(0.0, 1.0), Interval::centered(5.0, 0.5)],
            },
        };
        assert!(r.contains(&[0.5, 5.4]).unwrap());
        assert!(!r.contains(&[0.5, 5.6]).unwrap());
        assert!(r.contains(&[0.5]).is_err());
    }

    #[test]
    fn ellipsoid_membership_and_serialization() {
        let r = ConfidenceRegion {
            level: 0.95,
            shape: RegionShape::Ellipsoid {
                center: vec![1.0, 2.0],
                precision_diag: vec![4.0, 1.0],
                radius2: 1.0,
            },
        };
        assert!(r.contains(&[1.0, 2.0]).unwrap());
        assert!(r.contains(&[1.5, 2.0]).unwrap());
        assert!(!r.contains(&[1.6, 2.0]).unwrap());
        let js = serde_json::to_value(&r).unwrap();
        assert_eq!(js["kind"], "ellipsoid");
        let back: ConfidenceRegion = serde_json::from_value(js).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn union_membership() {
        let r = ConfidenceRegion {
            level: 0.9,
            shape: RegionShape::TwoSidedUnion {
                plus: Interval::new(1.1, 1.2),
                minus: Interval::new(0.8, 0.9),
            },
        };
        assert!(r.contains(&[1.15]).unwrap());
        assert!(r.contains(&[0.85]).unwrap());
        assert!(!r.contains(&[1.0]).unwrap());
    }
}
