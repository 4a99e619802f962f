//! Trip cost `c(o, d, y) = |o - y|^2 + |o - d|^2 + |d - y|^2` and the
//! quantities derived from it.
//!
//! Expanding the squares gives
//!
//! ```text
//! c = 2|y|^2 + (2|o|^2 + 2|d|^2 - 2 o.d) + 2 * (-(o + d) . y)
//! ```
//!
//! so up to terms that depend on one side only, the cost is twice the
//! bilinear reduced cost `-s . y` with index `s = o + d`. Every coupling with
//! fixed marginals therefore has `<c, pi> = K + 2 <c_hat, pi>`.

mod dynamics;

pub use dynamics::{expm, whiten, wpd_cost, wpd_gramian, DynamicsSpec, Gramian};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, TaskSet};

/// Dense task-by-agent cost matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    values: Vec<f64>,
    n_tasks: usize,
    n_agents: usize,
}

impl CostMatrix {
    pub fn from_fn(n_tasks: usize, n_agents: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n_tasks == 0 || n_agents == 0 {
            return Err(Error::Empty("cost matrix".into()));
        }
        let mut values = Vec::with_capacity(n_tasks * n_agents);
        for i in 0..n_tasks {
            for j in 0..n_agents {
                values.push(f(i, j));
            }
        }
        Self::from_vec(n_tasks, n_agents, values)
    }

    pub fn from_vec(n_tasks: usize, n_agents: usize, values: Vec<f64>) -> Result<Self> {
        if n_tasks == 0 || n_agents == 0 {
            return Err(Error::Empty("cost matrix".into()));
        }
        if values.len() != n_tasks * n_agents {
            return Err(Error::dims("cost matrix entries", n_tasks * n_agents, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "cost matrix".into(),
            });
        }
        Ok(Self {
            values,
            n_tasks,
            n_agents,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_agents = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_agents) {
            return Err(Error::dims("cost matrix row", n_agents, bad.len()));
        }
        Self::from_vec(rows.len(), n_agents, rows.concat())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_agents + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_agents..(i + 1) * self.n_agents]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max - min` over all entries.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n_agents).map(<[f64]>::to_vec).collect()
    }
}

fn same_dims(o: &[f64], d: &[f64], y: &[f64]) -> Result<()> {
    if d.len() != o.len() {
        return Err(Error::dims("destination", o.len(), d.len()));
    }
    if y.len() != o.len() {
        return Err(Error::dims("agent position", o.len(), y.len()));
    }
    Ok(())
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pickup, shipping and return legs, each a squared Euclidean length.
pub fn trip_cost(o: &[f64], d: &[f64], y: &[f64]) -> Result<f64> {
    same_dims(o, d, y)?;
    Ok(sq_dist(o, y) + sq_dist(o, d) + sq_dist(d, y))
}

/// Gradient with respect to the stacked task point `x = [o; d]`.
pub fn grad_x(o: &[f64], d: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    same_dims(o, d, y)?;
    let n = o.len();
    let mut g = Vec::with_capacity(2 * n);
    g.extend((0..n).map(|k| 2.0 * (o[k] - y[k]) + 2.0 * (o[k] - d[k])));
    g.extend((0..n).map(|k| 2.0 * (d[k] - y[k]) + 2.0 * (d[k] - o[k])));
    Ok(g)
}

/// Gradient with respect to the agent position: `4y - 2(o + d)`.
pub fn grad_y(o: &[f64], d: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    same_dims(o, d, y)?;
    Ok((0..o.len()).map(|k| 4.0 * y[k] - 2.0 * (o[k] + d[k])).collect())
}

/// Mixed second derivative, a `2n x n` matrix. It is the constant
/// `[-2 I; -2 I]` for this cost; the arguments only fix `n`.
pub fn mixed_hessian(o: &[f64], d: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    same_dims(o, d, y)?;
    let n = o.len();
    Ok(DMatrix::from_fn(2 * n, n, |r, c| if r % n == c { -2.0 } else { 0.0 }))
}

fn check_dims(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::dims(what, expected, found));
    }
    Ok(())
}

pub fn cost_matrix(tasks: &TaskSet, agents: &DiscreteMeasure) -> Result<CostMatrix> {
    check_dims("agent dimension", tasks.dim(), agents.dim())?;
    CostMatrix::from_fn(tasks.len(), agents.len(), |i, j| {
        let (o, d, y) = (tasks.origin(i), tasks.destination(i), agents.point(j));
        sq_dist(o, y) + sq_dist(o, d) + sq_dist(d, y)
    })
}

/// `values[i][j] = -(s_i . y_j)`.
pub fn reduced_cost_matrix(index: &DiscreteMeasure, agents: &DiscreteMeasure) -> Result<CostMatrix> {
    check_dims("agent dimension", index.dim(), agents.dim())?;
    CostMatrix::from_fn(index.len(), agents.len(), |i, j| -dot(index.point(i), agents.point(j)))
}

/// Task-only part of the cost, `2|o|^2 + 2|d|^2 - 2 o.d`, per task.
pub fn task_offsets(tasks: &TaskSet) -> Vec<f64> {
    (0..tasks.len())
        .map(|i| {
            let (o, d) = (tasks.origin(i), tasks.destination(i));
            2.0 * dot(o, o) + 2.0 * dot(d, d) - 2.0 * dot(o, d)
        })
        .collect()
}

/// Agent-only part of the cost, `2|y|^2`, per agent.
pub fn agent_offsets(agents: &DiscreteMeasure) -> Vec<f64> {
    agents.points().iter().map(|y| 2.0 * dot(y, y)).collect()
}

/// The constant `K` in `<c, pi> = K + 2 <c_hat, pi>`; it depends only on
/// the two marginals.
pub fn reduction_constant(tasks: &TaskSet, agents: &DiscreteMeasure) -> Result<f64> {
    check_dims("agent dimension", tasks.dim(), agents.dim())?;
    let from_tasks: f64 = task_offsets(tasks).iter().zip(tasks.weights()).map(|(a, w)| a * w).sum();
    let from_agents: f64 = agent_offsets(agents).iter().zip(agents.weights()).map(|(b, w)| b * w).sum();
    Ok(from_tasks + from_agents)
}
