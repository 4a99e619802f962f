//! Transportation simplex on a dense cost matrix.
//!
//! The basis is a spanning tree over row and column nodes with exactly
//! `m + n - 1` basic cells (zero-flow basic cells are allowed). The start
//! basis comes from the north-west-corner rule. Entering cells are chosen
//! by most negative reduced cost; after `3 (m + n)` consecutive degenerate
//! pivots the rule switches to Bland's (first improving cell in row-major
//! order) until a pivot moves mass again. Ties for the leaving cell go to
//! the smallest `(row, column)`.

use crate::cost::CostMatrix;
use crate::error::{Error, Result};

use super::{check_marginals, DualPotentials, TransportPlan};

/// Masses at or below `MASS_EPS * total` are treated as zero in ratio tests.
const MASS_EPS: f64 = 1e-14;
/// Reduced costs must be below `-PRICE_EPS * max(1, max|c|)` to enter.
const PRICE_EPS: f64 = 1e-12;

const NONE: usize = usize::MAX;

struct Basis<'a> {
    cost: &'a CostMatrix,
    m: usize,
    n: usize,
    flow: Vec<f64>,
    basic: Vec<bool>,
    // tree adjacency: rows are nodes 0..m, columns m..m+n
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    queue: Vec<usize>,
}

impl<'a> Basis<'a> {
    fn north_west_corner(cost: &'a CostMatrix, mu: &[f64], nu: &[f64]) -> Self {
        let (m, n) = (cost.n_tasks(), cost.n_agents());
        let mut basis = Basis {
            cost,
            m,
            n,
            flow: vec![0.0; m * n],
            basic: vec![false; m * n],
            row_adj: vec![Vec::new(); m],
            col_adj: vec![Vec::new(); n],
            u: vec![0.0; m],
            v: vec![0.0; n],
            parent: vec![NONE; m + n],
            depth: vec![0; m + n],
            queue: Vec::with_capacity(m + n),
        };
        let mut a = mu.to_vec();
        let mut b = nu.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let q = a[i].min(b[j]).max(0.0);
            basis.add(i, j, q);
            a[i] -= q;
            b[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            // When row and column run out together, step down and leave a
            // zero-flow basic cell so the staircase stays connected.
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(basis.basic.iter().filter(|&&b| b).count(), m + n - 1);
        basis
    }

    fn add(&mut self, i: usize, j: usize, q: f64) {
        let k = i * self.n + j;
        self.basic[k] = true;
        self.flow[k] = q;
        self.row_adj[i].push(j);
        self.col_adj[j].push(i);
    }

    fn remove(&mut self, i: usize, j: usize) {
        let k = i * self.n + j;
        self.basic[k] = false;
        self.flow[k] = 0.0;
        self.row_adj[i].retain(|&c| c != j);
        self.col_adj[j].retain(|&r| r != i);
    }

    /// Solves `u_i + v_j = c_ij` on the tree with `u_0 = 0`, recording
    /// parent pointers and depths rooted at row 0.
    fn compute_potentials(&mut self) {
        let m = self.m;
        self.parent.fill(NONE);
        self.queue.clear();
        self.queue.push(0);
        self.u[0] = 0.0;
        self.depth[0] = 0;
        self.parent[0] = 0;
        let mut head = 0;
        while head < self.queue.len() {
            let node = self.queue[head];
            head += 1;
            if node < m {
                let i = node;
                for &j in &self.row_adj[i] {
                    if self.parent[m + j] == NONE {
                        self.parent[m + j] = node;
                        self.depth[m + j] = self.depth[node] + 1;
                        self.v[j] = self.cost.get(i, j) - self.u[i];
                        self.queue.push(m + j);
                    }
                }
            } else {
                let j = node - m;
                for &i in &self.col_adj[j] {
                    if self.parent[i] == NONE {
                        self.parent[i] = node;
                        self.depth[i] = self.depth[node] + 1;
                        self.u[i] = self.cost.get(i, j) - self.v[j];
                        self.queue.push(i);
                    }
                }
            }
        }
        debug_assert_eq!(self.queue.len(), self.m + self.n, "basis is not a spanning tree");
    }

    fn reduced_cost(&self, i: usize, j: usize) -> f64 {
        self.cost.get(i, j) - self.u[i] - self.v[j]
    }

    fn price_dantzig(&self, threshold: f64) -> Option<(usize, usize)> {
        let mut best = -threshold;
        let mut arg = None;
        for i in 0..self.m {
            let ui = self.u[i];
            let row = self.cost.row(i);
            for (j, (&c, &vj)) in row.iter().zip(&self.v).enumerate() {
                let d = c - ui - vj;
                if d < best && !self.basic[i * self.n + j] {
                    best = d;
                    arg = Some((i, j));
                }
            }
        }
        arg
    }

    fn price_bland(&self, threshold: f64) -> Option<(usize, usize)> {
        for i in 0..self.m {
            for j in 0..self.n {
                if !self.basic[i * self.n + j] && self.reduced_cost(i, j) < -threshold {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Cells of the cycle closed by entering `(p, q)`, in order, starting
    /// with the entering cell. Even positions gain mass, odd positions lose it.
    fn cycle(&self, p: usize, q: usize) -> Vec<(usize, usize)> {
        let m = self.m;
        let mut from_q = vec![m + q];
        let mut from_p = vec![p];
        let (mut a, mut b) = (m + q, p);
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
            from_q.push(a);
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
            from_p.push(b);
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
            from_q.push(a);
            from_p.push(b);
        }
        from_p.pop();
        from_q.extend(from_p.into_iter().rev());

        let cell = |x: usize, y: usize| if x < m { (x, y - m) } else { (y, x - m) };
        let mut cells = Vec::with_capacity(from_q.len());
        cells.push((p, q));
        cells.extend(from_q.windows(2).map(|w| cell(w[0], w[1])));
        cells
    }

    /// Applies the pivot and reports the amount of mass moved.
    fn pivot(&mut self, p: usize, q: usize, mass_eps: f64) -> f64 {
        let cycle = self.cycle(p, q);
        let n = self.n;
        let theta = cycle
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&(i, j)| self.flow[i * n + j])
            .fold(f64::INFINITY, f64::min);
        let leaving = cycle
            .iter()
            .skip(1)
            .step_by(2)
            .filter(|&&(i, j)| self.flow[i * n + j] <= theta + mass_eps)
            .min()
            .copied()
            .expect("cycle has a losing cell");

        for (k, &(i, j)) in cycle.iter().enumerate() {
            let f = &mut self.flow[i * n + j];
            if k % 2 == 0 {
                *f += theta;
            } else {
                *f -= theta;
                if *f <= mass_eps {
                    *f = 0.0;
                }
            }
        }
        self.add_existing(p, q);
        self.remove(leaving.0, leaving.1);
        theta
    }

    fn add_existing(&mut self, i: usize, j: usize) {
        self.basic[i * self.n + j] = true;
        self.row_adj[i].push(j);
        self.col_adj[j].push(i);
    }
}

/// Optimal basic feasible solution of the transportation problem together
/// with the dual potentials of the final basis (`u_0 = 0`).
pub fn solve_exact(cost: &CostMatrix, mu: &[f64], nu: &[f64]) -> Result<(TransportPlan, DualPotentials)> {
    check_marginals(cost, mu, nu)?;
    let (m, n) = (cost.n_tasks(), cost.n_agents());
    let total: f64 = mu.iter().sum();
    let mass_eps = MASS_EPS * total;
    let threshold = PRICE_EPS * cost.max_abs().max(1.0);
    let degenerate_limit = 3 * (m + n);
    let max_pivots = 50 * (m * n).max(100);

    let mut basis = Basis::north_west_corner(cost, mu, nu);
    let mut degenerate_run = 0;
    let mut pivots = 0;
    loop {
        basis.compute_potentials();
        let entering = if degenerate_run >= degenerate_limit {
            basis.price_bland(threshold)
        } else {
            basis.price_dantzig(threshold)
        };
        let Some((p, q)) = entering else { break };
        if pivots == max_pivots {
            return Err(Error::IterationLimit {
                iterations: pivots,
                violation: 0.0,
            });
        }
        let moved = basis.pivot(p, q, mass_eps);
        pivots += 1;
        if moved <= mass_eps {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
    }

    let entries = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| basis.basic[i * n + j])
        .map(|(i, j)| (i, j, basis.flow[i * n + j]));
    let plan = TransportPlan::from_entries(cost, entries);
    let duals = DualPotentials {
        u: basis.u,
        v: basis.v,
    };
    Ok((plan, duals))
}
