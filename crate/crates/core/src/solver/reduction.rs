use crate::cost::{agent_offsets, reduced_cost_matrix, reduction_constant, task_offsets, CostMatrix};
use crate::error::{Error, Result};
use crate::measures::{index_pushforward, DiscreteMeasure, TaskSet};
use crate::scenarios::rng_stream;

use super::{solve_exact, DualPotentials, TransportPlan};

/// Scale of the entry-wise uniform cost perturbation used by [`is_unique`].
pub const UNIQUENESS_PERTURBATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSolution {
    /// Plan over (task, agent) indices; `plan.objective` is the reduced
    /// objective `<c_hat, pi>`.
    pub plan: TransportPlan,
    /// Potentials for the full trip cost, anchored at `u_0 = 0`.
    pub duals: DualPotentials,
    pub constant: f64,
    /// `<c, pi> = constant + 2 <c_hat, pi>`.
    pub objective_full: f64,
}

impl ReducedSolution {
    pub fn reduced_objective(&self) -> f64 {
        self.plan.objective
    }
}

/// Solves the index-form problem `min <-s.y, pi>` with `s = o + d` and maps
/// the answer back to the trip cost.
pub fn solve_via_reduction(tasks: &TaskSet, agents: &DiscreteMeasure) -> Result<ReducedSolution> {
    if tasks.dim() != agents.dim() {
        return Err(Error::dims("agent dimension", tasks.dim(), agents.dim()));
    }
    let index = index_pushforward(tasks);
    let reduced = reduced_cost_matrix(&index, agents)?;
    let (plan, reduced_duals) = solve_exact(&reduced, index.weights(), agents.weights())?;
    let constant = reduction_constant(tasks, agents)?;

    // c_ij = 2 c_hat_ij + a_i + b_j, so (2u' + a, 2v' + b) is dual feasible for c.
    let a = task_offsets(tasks);
    let b = agent_offsets(agents);
    let mut u: Vec<f64> = reduced_duals.u.iter().zip(&a).map(|(u, a)| 2.0 * u + a).collect();
    let mut v: Vec<f64> = reduced_duals.v.iter().zip(&b).map(|(v, b)| 2.0 * v + b).collect();
    let shift = u[0];
    u.iter_mut().for_each(|x| *x -= shift);
    v.iter_mut().for_each(|x| *x += shift);

    Ok(ReducedSolution {
        objective_full: constant + 2.0 * plan.objective,
        plan,
        duals: DualPotentials { u, v },
        constant,
    })
}

/// Re-solves with the cost perturbed entry-wise by
/// `UNIQUENESS_PERTURBATION * U(0, 1)` and reports whether the support of
/// `plan` survives.
pub fn is_unique(cost: &CostMatrix, mu: &[f64], nu: &[f64], plan: &TransportPlan, seed: u64) -> Result<bool> {
    let mut rng = rng_stream(seed);
    let perturbed: Vec<f64> = cost
        .values()
        .iter()
        .map(|c| c + UNIQUENESS_PERTURBATION * rng.uniform())
        .collect();
    let perturbed = CostMatrix::from_vec(cost.n_tasks(), cost.n_agents(), perturbed)?;
    let (other, _) = solve_exact(&perturbed, mu, nu)?;
    Ok(other.support() == plan.support())
}
