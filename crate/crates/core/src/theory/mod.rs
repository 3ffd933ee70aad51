//! Convergence bounds and the checks run against recorded trajectories.

pub mod bounds;
pub mod concentration;
pub mod events;
pub mod pathwise;

pub use bounds::{bound_for_regime, cvx_bound, nc_bound, sc_bound, sc_bound_terms, BoundInputs};
pub use concentration::{
    beta_raw_moment, chi_square_caps, freedman_linear_cap, freedman_tail, maximal_bernstein_tail,
    perturbed_recursion_cap, projection_floor, rho_sum_caps, rho_weights, weighted_chi_square_cap,
    FloorMode,
};
pub use events::{check_events, EventMargins, EventReport, EventShares};
pub use pathwise::{check_pathwise, PathwiseInputs, PathwiseReport};
