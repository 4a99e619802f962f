//! Solvers for the discrete transport problem
//!
//! ```text
//! minimize  sum_ij c_ij pi_ij
//! s.t.      sum_j pi_ij = mu_i,  sum_i pi_ij = nu_j,  pi >= 0
//! ```
//!
//! plus the diagnostics used to certify a returned plan.

mod brute;
mod entropic;
mod reduction;
mod simplex;

pub use brute::{brute_force_small, MAX_BRUTE_FORCE};
pub use entropic::{solve_entropic, EntropicOptions};
pub use reduction::{is_unique, solve_via_reduction, ReducedSolution, UNIQUENESS_PERTURBATION};
pub use simplex::solve_exact;

use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};

/// Tolerance on `|sum(mu) - sum(nu)|` before a solve is refused.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub task: usize,
    pub agent: usize,
    pub mass: f64,
}

/// Sparse coupling over task x agent indices. Only positive masses are
/// stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    /// `<c, pi>` for the cost matrix the plan was solved against.
    pub objective: f64,
    pub n_tasks: usize,
    pub n_agents: usize,
}

impl TransportPlan {
    /// Builds a plan from `(task, agent, mass)` triples, dropping zero masses
    /// and evaluating the objective against `cost`.
    pub fn from_entries(cost: &CostMatrix, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let entries: Vec<PlanEntry> = entries
            .into_iter()
            .filter(|&(_, _, mass)| mass > 0.0)
            .map(|(task, agent, mass)| PlanEntry { task, agent, mass })
            .collect();
        let objective = entries.iter().map(|e| e.mass * cost.get(e.task, e.agent)).sum();
        Self {
            entries,
            objective,
            n_tasks: cost.n_tasks(),
            n_agents: cost.n_agents(),
        }
    }

    /// Re-evaluates `<c, pi>` for another cost matrix of the same shape.
    pub fn objective_for(&self, cost: &CostMatrix) -> f64 {
        self.entries.iter().map(|e| e.mass * cost.get(e.task, e.agent)).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_tasks];
        for e in &self.entries {
            s[e.task] += e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_agents];
        for e in &self.entries {
            s[e.agent] += e.mass;
        }
        s
    }

    /// Largest absolute deviation of either marginal from `mu` / `nu`.
    pub fn marginal_violation(&self, mu: &[f64], nu: &[f64]) -> f64 {
        let (rows, cols) = (self.row_sums(), self.col_sums());
        let dr = rows.iter().zip(mu).map(|(a, b)| (a - b).abs());
        let dc = cols.iter().zip(nu).map(|(a, b)| (a - b).abs());
        dr.chain(dc).fold(0.0, f64::max)
    }

    /// Sorted `(task, agent)` pairs carrying mass.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut s: Vec<_> = self.entries.iter().map(|e| (e.task, e.agent)).collect();
        s.sort_unstable();
        s
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_agents]; self.n_tasks];
        for e in &self.entries {
            d[e.task][e.agent] += e.mass;
        }
        d
    }
}

/// Payoffs `u` (tasks) and `v` (agents) with `u_i + v_j <= c_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPotentials {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl DualPotentials {
    /// `sum mu_i u_i + sum nu_j v_j`, equal to the primal optimum at optimality.
    pub fn value(&self, mu: &[f64], nu: &[f64]) -> f64 {
        let a: f64 = self.u.iter().zip(mu).map(|(u, w)| u * w).sum();
        let b: f64 = self.v.iter().zip(nu).map(|(v, w)| v * w).sum();
        a + b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `max_ij (u_i + v_j - c_ij)`; positive values are blocking pairs.
    pub max_violation: f64,
    /// `max |u_i + v_j - c_ij|` over the plan's support.
    pub max_slack_on_support: f64,
    pub passed: bool,
}

/// Checks dual feasibility everywhere and complementary slackness on the
/// support.
pub fn check_stability(
    plan: &TransportPlan,
    duals: &DualPotentials,
    cost: &CostMatrix,
    tol: f64,
) -> Result<StabilityReport> {
    let (m, n) = (cost.n_tasks(), cost.n_agents());
    if duals.u.len() != m {
        return Err(Error::dims("task duals", m, duals.u.len()));
    }
    if duals.v.len() != n {
        return Err(Error::dims("agent duals", n, duals.v.len()));
    }
    if plan.n_tasks != m || plan.n_agents != n {
        return Err(Error::dims("plan shape", m * n, plan.n_tasks * plan.n_agents));
    }
    let mut max_violation = f64::NEG_INFINITY;
    for i in 0..m {
        let ui = duals.u[i];
        for (c, v) in cost.row(i).iter().zip(&duals.v) {
            max_violation = max_violation.max(ui + v - c);
        }
    }
    let max_slack_on_support = plan
        .entries
        .iter()
        .map(|e| (duals.u[e.task] + duals.v[e.agent] - cost.get(e.task, e.agent)).abs())
        .fold(0.0, f64::max);
    Ok(StabilityReport {
        max_violation,
        max_slack_on_support,
        passed: max_violation <= tol && max_slack_on_support <= tol,
    })
}

/// Fraction of task mass sitting in rows where a single entry carries at
/// least `1 - tol` of the row.
pub fn purity(plan: &TransportPlan, tol: f64) -> f64 {
    let mut row_total = vec![0.0; plan.n_tasks];
    let mut row_max = vec![0.0f64; plan.n_tasks];
    for e in &plan.entries {
        row_total[e.task] += e.mass;
        row_max[e.task] = row_max[e.task].max(e.mass);
    }
    let total: f64 = row_total.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let pure: f64 = row_total
        .iter()
        .zip(&row_max)
        .filter(|&(&t, &mx)| t > 0.0 && mx >= (1.0 - tol) * t)
        .map(|(t, _)| t)
        .sum();
    pure / total
}

/// Shared precondition check for every solver entry point.
pub(crate) fn check_marginals(cost: &CostMatrix, mu: &[f64], nu: &[f64]) -> Result<()> {
    if mu.len() != cost.n_tasks() {
        return Err(Error::dims("task weights", cost.n_tasks(), mu.len()));
    }
    if nu.len() != cost.n_agents() {
        return Err(Error::dims("agent weights", cost.n_agents(), nu.len()));
    }
    for (index, &value) in mu.iter().chain(nu).enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "marginal weights".into(),
            });
        }
        if value < 0.0 {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    let tasks: f64 = mu.iter().sum();
    let agents: f64 = nu.iter().sum();
    if (tasks - agents).abs() > MASS_TOLERANCE || tasks <= 0.0 {
        return Err(Error::MassMismatch { tasks, agents });
    }
    Ok(())
}
