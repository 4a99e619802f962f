use nalgebra::{DMatrix, DVector};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};

use super::{check_marginals, TransportPlan};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicOptions {
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl EntropicOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Stage tolerance while the regularization is still being annealed.
const STAGE_TOL: f64 = 1e-4;
/// Ratio between consecutive regularization levels.
const STAGE_FACTOR: f64 = 0.5;
/// Violation below which Newton steps take over from Sinkhorn sweeps.
const NEWTON_START: f64 = 1e-5;
/// Largest dense Newton system, in unknowns.
const NEWTON_MAX_DIM: usize = 2000;
const NEWTON_MAX_STEPS: usize = 50;

/// Entropy-regularized transport by Sinkhorn scaling in the log domain.
///
/// The plan is `exp((f_i + g_j - c_ij) / epsilon)`. Each iteration updates
/// `f` then `g` with max-stabilized log-sum-exps, after which the agent
/// marginal holds exactly and only the task marginal is tested against
/// `tol`. The regularization is annealed from the cost spread down to
/// `epsilon`, halving per stage and warm-starting each stage from the last.
/// At the final level, once the violation is below `1e-5`, Newton steps on
/// the dual finish the job; plain sweeps converge linearly at a rate that
/// approaches 1 as `epsilon` shrinks. The fixed point is unchanged, and
/// `max_iter` bounds sweeps plus Newton steps over all stages. The returned
/// objective is `<c, pi>` without the entropy term.
pub fn solve_entropic(cost: &CostMatrix, mu: &[f64], nu: &[f64], opts: EntropicOptions) -> Result<TransportPlan> {
    check_marginals(cost, mu, nu)?;
    let EntropicOptions { epsilon, tol, max_iter } = opts;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", "must be positive and finite"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter", "must be positive"));
    }
    let mut state = Sinkhorn {
        cost,
        log_mu: mu.iter().map(|w| w.ln()).collect(),
        log_nu: nu.iter().map(|w| w.ln()).collect(),
        f: vec![0.0; mu.len()],
        g: vec![0.0; nu.len()],
        iterations: 0,
    };
    let mut eps = epsilon.max(cost.spread());
    while eps > epsilon {
        state.run(eps, STAGE_TOL.max(tol), max_iter);
        eps = (eps * STAGE_FACTOR).max(epsilon);
    }
    let use_newton = mu.len() + nu.len() <= NEWTON_MAX_DIM;
    let handoff = if use_newton { tol.max(NEWTON_START) } else { tol };
    let mut violation = state.run(epsilon, handoff, max_iter);
    while violation >= tol && state.iterations < max_iter {
        if use_newton {
            violation = state.newton(epsilon, tol, max_iter);
            if violation < tol {
                break;
            }
        }
        // A short burst of sweeps before retrying Newton.
        let budget = if use_newton { (state.iterations + 100).min(max_iter) } else { max_iter };
        violation = state.run(epsilon, tol, budget);
    }
    if violation >= tol {
        return Err(Error::IterationLimit {
            iterations: state.iterations,
            violation,
        });
    }
    let (m, n) = (mu.len(), nu.len());
    let (f, g) = (&state.f, &state.g);
    let entries = (0..m).flat_map(|i| (0..n).map(move |j| (i, j, ((f[i] + g[j] - cost.get(i, j)) / epsilon).exp())));
    Ok(TransportPlan::from_entries(cost, entries))
}

struct Sinkhorn<'a> {
    cost: &'a CostMatrix,
    log_mu: Vec<f64>,
    log_nu: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    iterations: usize,
}

impl Sinkhorn<'_> {
    fn plan(&self, eps: f64) -> DMatrix<f64> {
        let (m, n) = (self.f.len(), self.g.len());
        DMatrix::from_fn(m, n, |i, j| ((self.f[i] + self.g[j] - self.cost.get(i, j)) / eps).exp())
    }

    /// Marginal residuals `(mu - row sums, nu - column sums)` and their max norm.
    fn residuals(&self, plan: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>, f64) {
        let rows: Vec<f64> = (0..plan.nrows())
            .map(|i| self.log_mu[i].exp() - plan.row(i).sum())
            .collect();
        let cols: Vec<f64> = (0..plan.ncols())
            .map(|j| self.log_nu[j].exp() - plan.column(j).sum())
            .collect();
        let worst = rows.iter().chain(&cols).fold(0.0f64, |w, r| w.max(r.abs()));
        (rows, cols, worst)
    }

    /// Damped Newton on the dual with the last agent potential held fixed
    /// (the dual is invariant under `f + t, g - t`). Returns the violation
    /// on both marginals.
    fn newton(&mut self, eps: f64, tol: f64, max_iter: usize) -> f64 {
        let (m, n) = (self.f.len(), self.g.len());
        let mut plan = self.plan(eps);
        let (mut rr, mut rc, mut worst) = self.residuals(&plan);
        for _ in 0..NEWTON_MAX_STEPS {
            if worst < tol || self.iterations >= max_iter {
                break;
            }
            self.iterations += 1;
            let k = m + n - 1;
            let mut h = DMatrix::zeros(k, k);
            for i in 0..m {
                h[(i, i)] = plan.row(i).sum();
                for j in 0..n - 1 {
                    h[(i, m + j)] = plan[(i, j)];
                    h[(m + j, i)] = plan[(i, j)];
                }
            }
            for j in 0..n - 1 {
                h[(m + j, m + j)] = plan.column(j).sum();
            }
            let rhs = DVector::from_iterator(k, rr.iter().chain(&rc[..n - 1]).map(|r| eps * r));
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => match h.lu().solve(&rhs) {
                    Some(x) => x,
                    None => break,
                },
            };
            let (f0, g0) = (self.f.clone(), self.g.clone());
            let mut t = 1.0;
            let mut improved = false;
            while t > 1e-4 {
                for i in 0..m {
                    self.f[i] = f0[i] + t * step[i];
                }
                for j in 0..n - 1 {
                    self.g[j] = g0[j] + t * step[m + j];
                }
                let trial = self.plan(eps);
                let (r1, c1, w1) = self.residuals(&trial);
                if w1.is_finite() && w1 < worst {
                    (plan, rr, rc, worst) = (trial, r1, c1, w1);
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                self.f = f0;
                self.g = g0;
                break;
            }
        }
        worst
    }

    /// Iterates at `eps` until both marginals are within `tol` or the shared
    /// budget runs out. Returns the last violation.
    fn run(&mut self, eps: f64, tol: f64, max_iter: usize) -> f64 {
        let (m, n) = (self.f.len(), self.g.len());
        let mut lse = vec![0.0; m];
        loop {
            let mut violation = 0.0f64;
            for i in 0..m {
                let row = self.cost.row(i);
                lse[i] = log_sum_exp(row.iter().zip(&self.g).map(|(c, g)| (g - c) / eps));
                let mass = (self.f[i] / eps + lse[i]).exp();
                violation = violation.max((mass - self.log_mu[i].exp()).abs());
            }
            if violation < tol {
                // The agent marginal is exact only right after a sweep.
                let full = self.residuals(&self.plan(eps)).2;
                if full < tol {
                    return full;
                }
            }
            if self.iterations >= max_iter {
                return violation;
            }
            self.iterations += 1;
            for i in 0..m {
                self.f[i] = eps * (self.log_mu[i] - lse[i]);
            }
            for j in 0..n {
                let col = (0..m).map(|i| (self.f[i] - self.cost.get(i, j)) / eps);
                self.g[j] = eps * (self.log_nu[j] - log_sum_exp(col));
            }
        }
    }
}
