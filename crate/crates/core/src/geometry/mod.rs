//! High-dimensional geometry: tube volumes, distance-ratio moments,
//! concentration bounds, pairwise-distance statistics and analytic oracles.

mod bounds;
mod diagnostics;
mod oracle;
mod ratio;
mod special;
mod spread;
mod tube;

pub use bounds::{cube_overlap_bound, orthogonality_capacity, orthogonality_trial, CubeOverlap};
pub use diagnostics::{run_diagnostics, Check, DiagnosticsConfig, DiagnosticsReport};
pub use oracle::{sphere_linf_distance, Oracle, OracleDetector};
pub use ratio::{
    chebyshev_tail, ratio_expectation, ratio_moments, ratio_second_moment, simulate_ratio, RatioMoments,
    RatioSimulation,
};
pub use special::{
    gamma, gautschi_bounds, half_gamma_ratio, ln_gamma, ln_gamma_ratio, trig_integral_closed, trig_integral_simpson,
};
pub use spread::{
    min_pairwise_stats, relative_spread, AnchorPolicy, Histogram, Metric, MinPairStats, PairSets, SpreadStats,
    MIN_DISTANCE_THRESHOLDS,
};
pub use tube::{weyl_tube_volume, TubeSpec};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("expected {expected} curvature invariants, got {got}")]
    InvariantCount { expected: usize, got: usize },
    #[error("{0}")]
    Invalid(String),
}
