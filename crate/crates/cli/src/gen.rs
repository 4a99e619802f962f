use odtalloc_core::measures::{write_agents_csv, write_tasks_csv};
use odtalloc_core::scenarios::{generate, ScenarioParams, ScenarioSpec, DEFAULT_CITY_BOX_M};

use crate::output::{out_dir, write_bytes, write_json};
use crate::{Failure, GenArgs, Kind};

fn params(args: &GenArgs) -> Result<ScenarioParams, Failure> {
    Ok(match args.kind {
        Kind::GaussianMixture => {
            if args.components == 0 {
                return Err(Failure::Usage("--components must be at least 1".into()));
            }
            ScenarioParams::random_mixture(args.dim, args.components, args.spread, args.extent, args.seed)
        }
        Kind::Grid => ScenarioParams::Grid { spacing: args.spacing },
        Kind::CityBox => {
            let (min, max) = match &args.bbox {
                Some(b) if b.len() == 4 => ([b[0], b[1]], [b[2], b[3]]),
                Some(_) => return Err(Failure::Usage("--box takes four values x0,y0,x1,y1".into())),
                None if args.degrees => return Err(Failure::Usage("--degrees needs --box".into())),
                None => DEFAULT_CITY_BOX_M,
            };
            ScenarioParams::CityBox {
                min,
                max,
                degrees: args.degrees,
            }
        }
    })
}

pub fn run(args: &GenArgs) -> Result<(), Failure> {
    let spec = ScenarioSpec {
        dim: args.dim,
        n_tasks: args.tasks,
        n_agents: args.agents,
        seed: args.seed,
        params: params(args)?,
    };
    let (tasks, agents) = generate(&spec).map_err(Failure::input)?;
    let dir = out_dir(&args.out)?;

    let mut buf = Vec::new();
    write_tasks_csv(&tasks, &mut buf).map_err(Failure::input)?;
    write_bytes(&dir.join("tasks.csv"), &buf)?;
    buf.clear();
    write_agents_csv(&agents, &mut buf).map_err(Failure::input)?;
    write_bytes(&dir.join("agents.csv"), &buf)?;
    write_json(&dir.join("spec.json"), &spec)?;

    println!(
        "generated {} tasks and {} agents ({}, dim {}, seed {}) in {}",
        tasks.len(),
        agents.len(),
        spec.kind(),
        spec.dim,
        spec.seed,
        dir.display()
    );
    Ok(())
}
