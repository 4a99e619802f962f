//! Seeded instance generators. `generate` is a pure function of the
//! [`ScenarioSpec`]; every generated measure has uniform weights.

mod rng;

pub use rng::{rng_stream, RngStream};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{project_lonlat, DiscreteMeasure, TaskSet};

/// Default city box, a 10 km square in projected meters.
pub const DEFAULT_CITY_BOX_M: ([f64; 2], [f64; 2]) = ([0.0, 0.0], [10_000.0, 10_000.0]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: Vec<f64>,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioParams {
    /// Origins, destinations and agents each drawn from an equally weighted
    /// isotropic Gaussian mixture.
    GaussianMixture {
        origins: Vec<Component>,
        destinations: Vec<Component>,
        agents: Vec<Component>,
    },
    /// Deterministic lattice: task `i` has origin = destination = lattice
    /// point `i`, agent `j` sits on lattice point `j`.
    Grid { spacing: f64 },
    /// Uniform draws in an axis-aligned 2-D box. With `degrees`, corners are
    /// `(lon, lat)` and draws are projected to meters relative to `min`.
    CityBox { min: [f64; 2], max: [f64; 2], degrees: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub dim: usize,
    pub n_tasks: usize,
    pub n_agents: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub params: ScenarioParams,
}

impl ScenarioParams {
    /// `components` mixture components per side, means uniform in
    /// `[-extent, extent]^dim` drawn from a stream split off `seed`.
    pub fn random_mixture(dim: usize, components: usize, spread: f64, extent: f64, seed: u64) -> Self {
        let mut rng = rng_stream(seed).split();
        let mut side = || -> Vec<Component> {
            (0..components)
                .map(|_| Component {
                    mean: (0..dim).map(|_| rng.uniform_range(-extent, extent)).collect(),
                    spread,
                })
                .collect()
        };
        let origins = side();
        let destinations = side();
        let agents = side();
        ScenarioParams::GaussianMixture {
            origins,
            destinations,
            agents,
        }
    }

    pub fn default_city_box() -> Self {
        let (min, max) = DEFAULT_CITY_BOX_M;
        ScenarioParams::CityBox {
            min,
            max,
            degrees: false,
        }
    }
}

impl ScenarioSpec {
    pub fn kind(&self) -> &'static str {
        match self.params {
            ScenarioParams::GaussianMixture { .. } => "gaussian_mixture",
            ScenarioParams::Grid { .. } => "grid",
            ScenarioParams::CityBox { .. } => "city_box",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if self.n_tasks == 0 {
            return Err(Error::invalid("n_tasks", "must be at least 1"));
        }
        if self.n_agents == 0 {
            return Err(Error::invalid("n_agents", "must be at least 1"));
        }
        match &self.params {
            ScenarioParams::GaussianMixture {
                origins,
                destinations,
                agents,
            } => {
                for (field, comps) in [("origins", origins), ("destinations", destinations), ("agents", agents)] {
                    if comps.is_empty() {
                        return Err(Error::invalid(field, "needs at least one component"));
                    }
                    for c in comps {
                        if !(c.spread > 0.0) || !c.spread.is_finite() {
                            return Err(Error::invalid(format!("{field}.spread"), "must be positive"));
                        }
                        if c.mean.len() != self.dim {
                            return Err(Error::invalid(format!("{field}.mean"), format!("must have {} entries", self.dim)));
                        }
                        if c.mean.iter().any(|v| !v.is_finite()) {
                            return Err(Error::invalid(format!("{field}.mean"), "must be finite"));
                        }
                    }
                }
            }
            ScenarioParams::Grid { spacing } => {
                if !(*spacing > 0.0) || !spacing.is_finite() {
                    return Err(Error::invalid("spacing", "must be positive"));
                }
            }
            ScenarioParams::CityBox { min, max, degrees } => {
                if self.dim != 2 {
                    return Err(Error::invalid("dim", "city_box requires dim = 2"));
                }
                if !(min[0] < max[0] && min[1] < max[1]) {
                    return Err(Error::invalid("box", "corners must satisfy min < max"));
                }
                if *degrees
                    && (min[0] < -180.0 || max[0] > 180.0 || min[1] < -90.0 || max[1] > 90.0)
                {
                    return Err(Error::invalid("box", "degree corners out of range"));
                }
            }
        }
        Ok(())
    }
}

fn draw_mixture(rng: &mut RngStream, comps: &[Component]) -> Vec<f64> {
    let c = &comps[rng.below(comps.len())];
    c.mean.iter().map(|m| m + c.spread * rng.normal()).collect()
}

/// Point `k` of a `side^dim` lattice, first coordinate fastest.
fn lattice_point(mut k: usize, side: usize, dim: usize, spacing: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let digit = k % side;
            k /= side;
            digit as f64 * spacing
        })
        .collect()
}

fn lattice_side(count: usize, dim: usize) -> usize {
    let mut side = 1usize;
    while side.saturating_pow(dim as u32) < count {
        side += 1;
    }
    side
}

/// Draw order: per task the origin then the destination, then all agents.
pub fn generate(spec: &ScenarioSpec) -> Result<(TaskSet, DiscreteMeasure)> {
    spec.validate()?;
    let (nt, na, dim) = (spec.n_tasks, spec.n_agents, spec.dim);
    let mut rng = rng_stream(spec.seed);
    let (origins, destinations, agents): (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) = match &spec.params {
        ScenarioParams::GaussianMixture {
            origins,
            destinations,
            agents,
        } => {
            let mut o = Vec::with_capacity(nt);
            let mut d = Vec::with_capacity(nt);
            for _ in 0..nt {
                o.push(draw_mixture(&mut rng, origins));
                d.push(draw_mixture(&mut rng, destinations));
            }
            let y = (0..na).map(|_| draw_mixture(&mut rng, agents)).collect();
            (o, d, y)
        }
        ScenarioParams::Grid { spacing } => {
            let ts = lattice_side(nt, dim);
            let as_ = lattice_side(na, dim);
            let o: Vec<Vec<f64>> = (0..nt).map(|i| lattice_point(i, ts, dim, *spacing)).collect();
            let y = (0..na).map(|j| lattice_point(j, as_, dim, *spacing)).collect();
            (o.clone(), o, y)
        }
        ScenarioParams::CityBox { min, max, degrees } => {
            let mut draw = || [rng.uniform_range(min[0], max[0]), rng.uniform_range(min[1], max[1])];
            let mut raw_o = Vec::with_capacity(nt);
            let mut raw_d = Vec::with_capacity(nt);
            for _ in 0..nt {
                raw_o.push(draw());
                raw_d.push(draw());
            }
            let raw_y: Vec<[f64; 2]> = (0..na).map(|_| draw()).collect();
            let to_points = |pts: Vec<[f64; 2]>| -> Result<Vec<Vec<f64>>> {
                if *degrees {
                    let ll: Vec<(f64, f64)> = pts.iter().map(|p| (p[0], p[1])).collect();
                    Ok(project_lonlat(&ll, (min[0], min[1]))?.into_iter().map(Vec::from).collect())
                } else {
                    Ok(pts.into_iter().map(Vec::from).collect())
                }
            };
            (to_points(raw_o)?, to_points(raw_d)?, to_points(raw_y)?)
        }
    };
    Ok((TaskSet::uniform(origins, destinations)?, DiscreteMeasure::uniform(agents)?))
}

/// Projected bounding box of a `city_box` scenario, in the generated units.
pub fn city_box_extent(params: &ScenarioParams) -> Option<([f64; 2], [f64; 2])> {
    match params {
        ScenarioParams::CityBox { min, max, degrees } => {
            if *degrees {
                let corners = project_lonlat(&[(min[0], min[1]), (max[0], max[1])], (min[0], min[1])).ok()?;
                Some((corners[0], corners[1]))
            } else {
                Some((*min, *max))
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{write_agents_csv, write_tasks_csv};

    fn csv_bytes(tasks: &TaskSet, agents: &DiscreteMeasure) -> (Vec<u8>, Vec<u8>) {
        let mut t = Vec::new();
        let mut a = Vec::new();
        write_tasks_csv(tasks, &mut t).unwrap();
        write_agents_csv(agents, &mut a).unwrap();
        (t, a)
    }

    #[test]
    fn canonical_grid_instance() {
        let spec = ScenarioSpec {
            dim: 1,
            n_tasks: 2,
            n_agents: 2,
            seed: 1,
            params: ScenarioParams::Grid { spacing: 1.0 },
        };
        let (tasks, agents) = generate(&spec).unwrap();
        assert_eq!(tasks.origins(), &[vec![0.0], vec![1.0]]);
        assert_eq!(tasks.destinations(), &[vec![0.0], vec![1.0]]);
        assert_eq!(agents.points(), &[vec![0.0], vec![1.0]]);
        assert_eq!(tasks.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn grid_in_two_dimensions() {
        let spec = ScenarioSpec {
            dim: 2,
            n_tasks: 5,
            n_agents: 4,
            seed: 0,
            params: ScenarioParams::Grid { spacing: 2.0 },
        };
        let (tasks, agents) = generate(&spec).unwrap();
        assert_eq!(tasks.origin(4), &[2.0, 2.0]);
        assert_eq!(agents.points(), &[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn generation_is_deterministic() {
        let params = ScenarioParams::random_mixture(3, 2, 0.5, 4.0, 9);
        let spec = ScenarioSpec {
            dim: 3,
            n_tasks: 20,
            n_agents: 20,
            seed: 9,
            params,
        };
        let first = generate(&spec).unwrap();
        let second = generate(&spec).unwrap();
        assert_eq!(csv_bytes(&first.0, &first.1), csv_bytes(&second.0, &second.1));

        let other = ScenarioSpec { seed: 10, ..spec };
        let third = generate(&other).unwrap();
        assert_ne!(first.0, third.0);
    }

    #[test]
    fn thirty_tasks_in_the_city_box() {
        let spec = ScenarioSpec {
            dim: 2,
            n_tasks: 30,
            n_agents: 30,
            seed: 2025,
            params: ScenarioParams::default_city_box(),
        };
        let (tasks, agents) = generate(&spec).unwrap();
        assert_eq!(tasks.len(), 30);
        assert_eq!(agents.len(), 30);
        let (lo, hi) = city_box_extent(&spec.params).unwrap();
        let inside = |p: &[f64]| (0..2).all(|k| p[k] >= lo[k] && p[k] <= hi[k]);
        assert!(tasks.origins().iter().chain(tasks.destinations()).all(|p| inside(p)));
        assert!(agents.points().iter().all(|p| inside(p)));
    }

    #[test]
    fn city_box_in_degrees_stays_inside_projected_corners() {
        let spec = ScenarioSpec {
            dim: 2,
            n_tasks: 50,
            n_agents: 40,
            seed: 4,
            params: ScenarioParams::CityBox {
                min: [17.95, 59.28],
                max: [18.15, 59.38],
                degrees: true,
            },
        };
        let (tasks, agents) = generate(&spec).unwrap();
        let (lo, hi) = city_box_extent(&spec.params).unwrap();
        assert_eq!(lo, [0.0, 0.0]);
        let inside = |p: &[f64]| (0..2).all(|k| p[k] >= lo[k] && p[k] <= hi[k]);
        assert!(tasks.origins().iter().chain(tasks.destinations()).all(|p| inside(p)));
        assert!(agents.points().iter().all(|p| inside(p)));
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let bad = |spec: ScenarioSpec, field: &str| match generate(&spec) {
            Err(Error::InvalidSpec { field: f, .. }) => assert!(f.contains(field), "{f} vs {field}"),
            other => panic!("expected InvalidSpec, got {other:?}"),
        };
        let base = ScenarioSpec {
            dim: 2,
            n_tasks: 3,
            n_agents: 3,
            seed: 0,
            params: ScenarioParams::Grid { spacing: 1.0 },
        };
        bad(ScenarioSpec { n_tasks: 0, ..base.clone() }, "n_tasks");
        bad(
            ScenarioSpec {
                params: ScenarioParams::Grid { spacing: 0.0 },
                ..base.clone()
            },
            "spacing",
        );
        bad(
            ScenarioSpec {
                dim: 1,
                params: ScenarioParams::default_city_box(),
                ..base.clone()
            },
            "dim",
        );
        bad(
            ScenarioSpec {
                params: ScenarioParams::CityBox {
                    min: [1.0, 0.0],
                    max: [0.0, 1.0],
                    degrees: false,
                },
                ..base.clone()
            },
            "box",
        );
        let mut mix = ScenarioParams::random_mixture(2, 1, 1.0, 1.0, 0);
        if let ScenarioParams::GaussianMixture { agents, .. } = &mut mix {
            agents[0].spread = -1.0;
        }
        bad(ScenarioSpec { params: mix, ..base }, "agents.spread");
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ScenarioSpec {
            dim: 1,
            n_tasks: 4,
            n_agents: 3,
            seed: 77,
            params: ScenarioParams::random_mixture(1, 2, 0.3, 2.0, 77),
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"gaussian_mixture\""));
        let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
