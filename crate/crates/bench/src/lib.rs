//! Instances shared by the benchmarks in `benches/`.

use odtalloc_core::scenarios::{generate, ScenarioParams, ScenarioSpec};
use odtalloc_core::{cost_matrix, CostMatrix, DiscreteMeasure, TaskSet};

pub struct Instance {
    pub tasks: TaskSet,
    pub agents: DiscreteMeasure,
    pub cost: CostMatrix,
}

/// Uniform `n x n` Gaussian-mixture instance in `dim` dimensions.
pub fn mixture(n: usize, dim: usize, seed: u64) -> Instance {
    let spec = ScenarioSpec {
        dim,
        n_tasks: n,
        n_agents: n,
        seed,
        params: ScenarioParams::random_mixture(dim, 3, 1.0, 5.0, seed),
    };
    let (tasks, agents) = generate(&spec).expect("valid spec");
    let cost = cost_matrix(&tasks, &agents).expect("matching dimensions");
    Instance { tasks, agents, cost }
}

/// The 30 x 30 city-box instance in meters.
pub fn city() -> Instance {
    let spec = ScenarioSpec {
        dim: 2,
        n_tasks: 30,
        n_agents: 30,
        seed: 2025,
        params: ScenarioParams::default_city_box(),
    };
    let (tasks, agents) = generate(&spec).expect("valid spec");
    let cost = cost_matrix(&tasks, &agents).expect("matching dimensions");
    Instance { tasks, agents, cost }
}
