//! Estimators, statistics and confidence regions for the three limit laws:
//! oscillating particles (`p ≠ g`), converging particles (`p = g`), and the
//! swarm cross-section at a fixed iteration.

pub mod constraints;
pub mod nonosc;
pub mod oscillatory;
pub mod quantile;
pub mod region;
pub mod report;
pub mod swarm;

pub use constraints::{check_a3, check_b2, constraint_grid, theorem1_constants, A3Check, B2Check, Theorem1Constants};
pub use nonosc::{
    estimate_mu_sigma, fit_log_decay, h2_statistic, ratio_chain, ratio_chain_from, region_nonoscillatory, DecayFit,
    LagWeights, LogBase, MuSigma, NonOscClt, RatioChain, RegionForm,
};
pub use oscillatory::{ci_oscillatory, ellipsoid_oscillatory, h1_statistic, OscillatoryClt};
pub use quantile::{chi2_quantile, normal_cdf, normal_quantile};
pub use region::{ConfidenceRegion, Interval, RegionShape};
pub use report::{EstimateMode, TheoremReport};
pub use swarm::{h3_and_ci, h3_with_exclusions, SwarmClt};
