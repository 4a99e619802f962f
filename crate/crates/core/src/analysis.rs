//! Numeric checks of the structural properties of the trip cost: twist,
//! non-degeneracy, the Monge (cross-difference) sign of the reduced cost,
//! nestedness in one dimension, and the comonotone 1-D coupling.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::cost::{grad_x, grad_y, mixed_hessian, reduced_cost_matrix};
use crate::error::{Error, Result};
use crate::measures::{index_pushforward, DiscreteMeasure, TaskSet};
use crate::scenarios::{rng_stream, RngStream};
use crate::solver::{check_marginals, TransportPlan};

/// Distance at or below which a task counts as inside an indifference set.
pub const INDIFFERENCE_TOL: f64 = 1e-9;
/// Relative singular value threshold for numeric rank.
pub const RANK_TOL: f64 = 1e-8;
/// Pairs closer than this are redrawn when checking twist.
const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub passed: bool,
    pub samples: usize,
    pub worst_case: f64,
    pub witness: Option<Vec<f64>>,
}

fn normal_vec(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_sampling(dim: usize, samples: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    Ok(())
}

/// Injectivity of `y -> grad_x c(x, y)`: the smallest observed ratio
/// `|grad_x c(x, y) - grad_x c(x, y')| / |y - y'|`. For this cost the
/// difference is `[2(y' - y); 2(y' - y)]`, so the ratio is `2 sqrt(2)`.
pub fn verify_twist(dim: usize, samples: usize, seed: u64) -> Result<ConditionReport> {
    check_sampling(dim, samples)?;
    let mut rng = rng_stream(seed);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let o = normal_vec(&mut rng, dim);
        let d = normal_vec(&mut rng, dim);
        let y = normal_vec(&mut rng, dim);
        let y2 = loop {
            let c = normal_vec(&mut rng, dim);
            let sep: Vec<f64> = c.iter().zip(&y).map(|(a, b)| a - b).collect();
            if norm(&sep) >= MIN_SEPARATION {
                break c;
            }
        };
        let g1 = grad_x(&o, &d, &y)?;
        let g2 = grad_x(&o, &d, &y2)?;
        let dg: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| a - b).collect();
        let ratio = norm(&dg) / norm(&dy);
        if ratio < worst {
            worst = ratio;
            witness = Some([o, d, y, y2].concat());
        }
    }
    Ok(ConditionReport {
        condition: "twist".into(),
        passed: worst > 0.0,
        samples,
        worst_case: worst,
        witness,
    })
}

/// Numeric rank of the mixed Hessian at random points; passes iff it is
/// `dim` everywhere. `worst_case` is the smallest `dim`-th singular value.
pub fn verify_nondegeneracy(dim: usize, samples: usize, seed: u64) -> Result<ConditionReport> {
    check_sampling(dim, samples)?;
    let mut rng = rng_stream(seed);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    let mut passed = true;
    for _ in 0..samples {
        let o = normal_vec(&mut rng, dim);
        let d = normal_vec(&mut rng, dim);
        let y = normal_vec(&mut rng, dim);
        let h = mixed_hessian(&o, &d, &y)?;
        let sv = SVD::new(h, false, false).singular_values;
        let largest = sv.max();
        let rank = sv.iter().filter(|&&s| s > RANK_TOL * largest).count();
        passed &= rank == dim;
        let smallest = sv.min();
        if smallest < worst {
            worst = smallest;
            witness = Some([o, d, y].concat());
        }
    }
    Ok(ConditionReport {
        condition: "nondegeneracy".into(),
        passed,
        samples,
        worst_case: worst,
        witness,
    })
}

/// `c(x, y) + c(x', y') - c(x, y') - c(x', y)`.
pub fn cross_difference<X: ?Sized, Y: ?Sized>(c: impl Fn(&X, &Y) -> f64, x: &X, x2: &X, y: &Y, y2: &Y) -> f64 {
    c(x, y) + c(x2, y2) - c(x, y2) - c(x2, y)
}

/// Reduced cost on scalars: `-s y`.
pub fn reduced_cost_1d(s: &f64, y: &f64) -> f64 {
    -s * y
}

/// Cross difference of the reduced cost over random ordered pairs
/// `s <= s'`, `y <= y'`; passes iff it never exceeds zero. `worst_case` is
/// the largest value seen.
pub fn verify_monge_1d(samples: usize, seed: u64) -> Result<ConditionReport> {
    check_sampling(1, samples)?;
    let mut rng = rng_stream(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let (a, b) = (rng.normal(), rng.normal());
        let (c, d) = (rng.normal(), rng.normal());
        let (s, s2) = (a.min(b), a.max(b));
        let (y, y2) = (c.min(d), c.max(d));
        let cd = cross_difference(reduced_cost_1d, &s, &s2, &y, &y2);
        if cd > worst {
            worst = cd;
            witness = Some(vec![s, s2, y, y2]);
        }
    }
    Ok(ConditionReport {
        condition: "monge".into(),
        passed: worst <= 0.0,
        samples,
        worst_case: worst,
        witness,
    })
}

/// Quantile of a weighted 1-D sample with linear interpolation between
/// order statistics. Sorted atom `k` sits at level `C_k / C_last`, where
/// `C_k` is the weight strictly before it; with equal weights this is
/// `k / (N - 1)`, so both endpoints are attained.
pub fn empirical_quantile(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let mut levels = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &k in &order {
        levels.push(acc);
        acc += weights[k];
    }
    let last = levels[n - 1];
    if last <= 0.0 {
        return sorted[n - 1];
    }
    levels.iter_mut().for_each(|l| *l /= last);
    if p <= 0.0 {
        return sorted[0];
    }
    if p >= 1.0 {
        return sorted[n - 1];
    }
    let k = levels.partition_point(|&l| l <= p) - 1;
    if k >= n - 1 {
        return sorted[n - 1];
    }
    let frac = (p - levels[k]) / (levels[k + 1] - levels[k]);
    sorted[k] + frac * (sorted[k + 1] - sorted[k])
}

fn require_1d(what: &str, dim: usize) -> Result<()> {
    if dim != 1 {
        return Err(Error::dims(what, 1, dim));
    }
    Ok(())
}

/// Nestedness of the sub-level sets of `x -> grad_y c(x, y)` for scalar
/// agents.
///
/// With `grad_y c = 4y - 2s`, the set `{grad_y c <= k}` is `{s >= (4y - k) / 2}`.
/// Calibrating it to hold mass `nu((-inf, y))` fixes the threshold `t(y)` as
/// the `1 - F_nu(y)` quantile of the index distribution. The sets are
/// nested iff `t` does not increase along a grid of agent quantiles.
/// `worst_case` is the largest step `t(y_{k+1}) - t(y_k)`.
pub fn check_nestedness_1d(tasks: &TaskSet, agents: &DiscreteMeasure, grid: usize) -> Result<ConditionReport> {
    require_1d("task dimension", tasks.dim())?;
    require_1d("agent dimension", agents.dim())?;
    if grid < 2 {
        return Err(Error::invalid("grid", "must be at least 2"));
    }
    let index = index_pushforward(tasks);
    let s: Vec<f64> = index.points().iter().map(|p| p[0]).collect();
    let y: Vec<f64> = agents.points().iter().map(|p| p[0]).collect();

    let mut prev: Option<(f64, f64)> = None;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for k in 0..grid {
        let level = k as f64 / (grid - 1) as f64;
        let yk = empirical_quantile(&y, agents.weights(), level);
        let below: f64 = y.iter().zip(agents.weights()).filter(|(v, _)| **v < yk).map(|(_, w)| w).sum();
        let t = empirical_quantile(&s, index.weights(), 1.0 - below);
        if let Some((py, pt)) = prev {
            let step = t - pt;
            if step > worst {
                worst = step;
                witness = Some(vec![py, yk, pt, t]);
            }
        }
        prev = Some((yk, t));
    }
    let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(ConditionReport {
        condition: "nestedness".into(),
        passed: worst <= 1e-12 * scale,
        samples: grid,
        worst_case: worst,
        witness,
    })
}

fn sorted_order(points: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
    order
}

/// Comonotone coupling: both sides sorted ascending, then filled by the
/// north-west-corner rule. Optimal for the reduced cost `-s y`, whose cross
/// difference is non-positive on ordered pairs. The objective is evaluated
/// against the reduced cost.
pub fn monotone_map_1d(index: &DiscreteMeasure, agents: &DiscreteMeasure) -> Result<TransportPlan> {
    require_1d("index dimension", index.dim())?;
    require_1d("agent dimension", agents.dim())?;
    let cost = reduced_cost_matrix(index, agents)?;
    check_marginals(&cost, index.weights(), agents.weights())?;
    let rows = sorted_order(index.points());
    let cols = sorted_order(agents.points());
    let mut a: Vec<f64> = rows.iter().map(|&i| index.weights()[i]).collect();
    let mut b: Vec<f64> = cols.iter().map(|&j| agents.weights()[j]).collect();
    let mut entries = Vec::with_capacity(rows.len() + cols.len());
    let (mut i, mut j) = (0, 0);
    while i < rows.len() && j < cols.len() {
        let q = a[i].min(b[j]);
        entries.push((rows[i], cols[j], q));
        a[i] -= q;
        b[j] -= q;
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(TransportPlan::from_entries(&cost, entries))
}

/// First pair of support entries `(i, k), (j, l)` with `s_i < s_j` and
/// `y_k > y_l`, if any.
pub fn find_crossing_1d(plan: &TransportPlan, s: &[f64], y: &[f64]) -> Option<((usize, usize), (usize, usize))> {
    let support = plan.support();
    for &(i, k) in &support {
        for &(j, l) in &support {
            if s[i] < s[j] && y[k] > y[l] {
                return Some(((i, k), (j, l)));
            }
        }
    }
    None
}

/// `|4y - 2(o + d) - k|`; zero iff the task `(o, d)` lies in the
/// indifference set `{x : grad_y c(x, y) = k}`.
pub fn indifference_set_distance(o: &[f64], d: &[f64], y: &[f64], k: &[f64]) -> Result<f64> {
    let g = grad_y(o, d, y)?;
    if k.len() != g.len() {
        return Err(Error::dims("level vector", g.len(), k.len()));
    }
    Ok(norm(&g.iter().zip(k).map(|(a, b)| a - b).collect::<Vec<_>>()))
}

pub fn in_indifference_set(o: &[f64], d: &[f64], y: &[f64], k: &[f64]) -> Result<bool> {
    Ok(indifference_set_distance(o, d, y, k)? <= INDIFFERENCE_TOL)
}
