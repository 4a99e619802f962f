//! Exhaustive reference solver for tiny instances. Used as a test oracle.

use itertools::Itertools;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};

use super::{check_marginals, TransportPlan};

/// Size bound: `N <= 8` for uniform square instances, otherwise
/// `n_tasks + n_agents <= 8`.
pub const MAX_BRUTE_FORCE: usize = 8;

fn is_uniform(w: &[f64]) -> bool {
    let first = w[0];
    w.iter().all(|&x| (x - first).abs() <= 1e-12 * first.abs().max(1e-300))
}

/// Globally optimal plan by enumeration.
///
/// Uniform square instances are scanned over all permutations (the
/// vertices of the Birkhoff polytope). Anything else small enough is solved
/// by enumerating basic feasible solutions: fix a cell, give it
/// `min(a_i, b_j)`, drop whichever side is exhausted, recurse.
pub fn brute_force_small(cost: &CostMatrix, mu: &[f64], nu: &[f64]) -> Result<TransportPlan> {
    check_marginals(cost, mu, nu)?;
    let (m, n) = (cost.n_tasks(), cost.n_agents());
    if m == n && m <= MAX_BRUTE_FORCE && is_uniform(mu) && is_uniform(nu) {
        return Ok(best_permutation(cost, mu));
    }
    if m + n > MAX_BRUTE_FORCE {
        return Err(Error::TooLarge {
            n_tasks: m,
            n_agents: n,
        });
    }
    let mut search = Search {
        cost,
        tol: 1e-14 * mu.iter().sum::<f64>(),
        cells: Vec::new(),
        best: None,
    };
    let rows: Vec<usize> = (0..m).collect();
    let cols: Vec<usize> = (0..n).collect();
    search.recurse(&rows, &cols, &mut mu.to_vec(), &mut nu.to_vec());
    let (_, cells) = search.best.expect("at least one basic solution");
    Ok(TransportPlan::from_entries(cost, cells))
}

fn best_permutation(cost: &CostMatrix, mu: &[f64]) -> TransportPlan {
    let n = cost.n_tasks();
    let best = (0..n)
        .permutations(n)
        .map(|p| {
            let value: f64 = p.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum();
            (value, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .expect("n >= 1");
    TransportPlan::from_entries(cost, best.into_iter().enumerate().map(|(i, j)| (i, j, mu[i])))
}

struct Search<'a> {
    cost: &'a CostMatrix,
    tol: f64,
    cells: Vec<(usize, usize, f64)>,
    best: Option<(f64, Vec<(usize, usize, f64)>)>,
}

impl Search<'_> {
    fn finish(&mut self) {
        let value: f64 = self.cells.iter().map(|&(i, j, q)| q * self.cost.get(i, j)).sum();
        if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
            self.best = Some((value, self.cells.clone()));
        }
    }

    fn recurse(&mut self, rows: &[usize], cols: &[usize], a: &mut [f64], b: &mut [f64]) {
        if rows.len() == 1 || cols.len() == 1 {
            let before = self.cells.len();
            if rows.len() == 1 {
                self.cells.extend(cols.iter().map(|&j| (rows[0], j, b[j])));
            } else {
                self.cells.extend(rows.iter().map(|&i| (i, cols[0], a[i])));
            }
            self.finish();
            self.cells.truncate(before);
            return;
        }
        for (ri, &i) in rows.iter().enumerate() {
            for (ci, &j) in cols.iter().enumerate() {
                let (ai, bj) = (a[i], b[j]);
                let q = ai.min(bj);
                self.cells.push((i, j, q));
                if ai <= bj + self.tol {
                    let rest: Vec<usize> = rows.iter().enumerate().filter(|&(k, _)| k != ri).map(|(_, &r)| r).collect();
                    b[j] = bj - q;
                    self.recurse(&rest, cols, a, b);
                    b[j] = bj;
                }
                if bj <= ai + self.tol {
                    let rest: Vec<usize> = cols.iter().enumerate().filter(|&(k, _)| k != ci).map(|(_, &c)| c).collect();
                    a[i] = ai - q;
                    self.recurse(rows, &rest, a, b);
                    a[i] = ai;
                }
                self.cells.pop();
            }
        }
    }
}
