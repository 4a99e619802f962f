//! Optimal assignment of origin/destination tasks to agents under the trip
//! cost `|o - y|^2 + |o - d|^2 + |d - y|^2`.
//!
//! Tasks live in `R^{2n}` and agents in `R^n`. The exact solver is a
//! transportation simplex; [`solver::solve_via_reduction`] solves the same
//! problem through the index `s = o + d`, which turns the cost into an inner
//! product up to separable terms.

pub mod analysis;
pub mod cost;
pub mod error;
pub mod measures;
pub mod scenarios;
pub mod solver;

pub use cost::{cost_matrix, trip_cost, CostMatrix};
pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, TaskSet};
pub use scenarios::{generate, ScenarioParams, ScenarioSpec};
pub use solver::{
    brute_force_small, check_stability, solve_entropic, solve_exact, solve_via_reduction, DualPotentials,
    EntropicOptions, PlanEntry, ReducedSolution, StabilityReport, TransportPlan,
};
