//! Kähler-Einstein metrics with `Ric = -ω` on two-dimensional Reinhardt domains, metric
//! distance estimates and the Schwarz-Yau comparison checks built on them.

mod banded;
mod checks;
mod distance;
mod solver;

pub use checks::{
    eq5_check, grid_metric_matrix, infinitesimal_comparison, ke_bracket, polydisk_origin_metric,
    schwarz_yau_residual, volume_determinant_check, BracketReport, CurvatureBounds, DirectionComparison,
    Eq5Report, InfinitesimalReport, MetricPair, SchwarzYauReport, VolumeReport,
};
pub use distance::{ke_distance_estimate, metric_value, real_slice_distance, slice_versus_phase_search};
pub use solver::{
    fd_reduced_hessian, log_coordinate_determinant, solve_ke, solve_ke_outcome, GridConfig, MetricGrid,
    SolveOutcome,
};
