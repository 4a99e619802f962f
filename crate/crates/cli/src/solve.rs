use std::io::Write;
use std::time::Instant;

use odtalloc_core::solver::is_unique;
use odtalloc_core::{
    cost_matrix, solve_entropic, solve_exact, solve_via_reduction, DualPotentials, EntropicOptions, TaskSet,
    TransportPlan,
};
use odtalloc_core::DiscreteMeasure;

use crate::output::{load_instance, out_dir, write_bytes, write_json, Manifest, PlanEntryFile, PlanFile};
use crate::{Failure, Method, SolveArgs};

fn plot_csv(plan: &TransportPlan, tasks: &TaskSet, agents: &DiscreteMeasure) -> Vec<u8> {
    let n = tasks.dim();
    let mut out = Vec::new();
    let mut header = vec!["task_id".to_string(), "agent_id".into(), "mass".into()];
    for prefix in ["o", "d", "y"] {
        header.extend((1..=n).map(|k| format!("{prefix}{k}")));
    }
    writeln!(out, "{}", header.join(",")).unwrap();
    for e in &plan.entries {
        write!(out, "{},{},{}", tasks.ids()[e.task], agents.ids()[e.agent], e.mass).unwrap();
        let coords = tasks.origin(e.task).iter().chain(tasks.destination(e.task)).chain(agents.point(e.agent));
        for c in coords {
            write!(out, ",{c}").unwrap();
        }
        writeln!(out).unwrap();
    }
    out
}

pub fn run(args: &SolveArgs) -> Result<(), Failure> {
    let mut manifest = Manifest::new(args.seed, args.method.name());
    let start = Instant::now();
    let (tasks, agents) = load_instance(&args.tasks, &args.agents, &mut manifest)?;
    manifest.record("load", start);
    let (mu, nu) = (tasks.weights(), agents.weights());
    let cost = manifest.time("cost", || cost_matrix(&tasks, &agents)).map_err(Failure::Solver)?;

    let (plan, objective, duals): (TransportPlan, f64, Option<DualPotentials>) = match args.method {
        Method::Exact => {
            let (plan, duals) = manifest.time("solve", || solve_exact(&cost, mu, nu)).map_err(Failure::Solver)?;
            let objective = plan.objective;
            (plan, objective, Some(duals))
        }
        Method::Reduced => {
            let sol = manifest.time("solve", || solve_via_reduction(&tasks, &agents)).map_err(Failure::Solver)?;
            (sol.plan, sol.objective_full, Some(sol.duals))
        }
        Method::Entropic => {
            let epsilon = args.epsilon.unwrap_or(1e-3 * cost.spread());
            let opts = EntropicOptions {
                epsilon,
                tol: args.tol,
                max_iter: args.max_iter,
            };
            let plan = manifest.time("solve", || solve_entropic(&cost, mu, nu, opts)).map_err(Failure::Solver)?;
            let objective = plan.objective;
            (plan, objective, None)
        }
    };
    // A dense entropic plan is never a vertex, so it is never reported unique.
    let unique = match args.method {
        Method::Entropic => false,
        _ => manifest
            .time("uniqueness", || is_unique(&cost, mu, nu, &plan, args.seed))
            .map_err(Failure::Solver)?,
    };

    let dir = out_dir(&args.out)?;
    let file = PlanFile {
        objective,
        entries: plan
            .entries
            .iter()
            .map(|e| PlanEntryFile {
                task: tasks.ids()[e.task].clone(),
                agent: agents.ids()[e.agent].clone(),
                mass: e.mass,
            })
            .collect(),
        duals,
        method: args.method.name().to_string(),
        unique,
    };
    write_json(&dir.join("plan.json"), &file)?;
    write_bytes(&dir.join("plot.csv"), &plot_csv(&plan, &tasks, &agents))?;
    if args.emit_cost {
        write_json(&dir.join("cost.json"), &cost.to_rows())?;
    }
    write_json(&dir.join("manifest.json"), &manifest)?;

    println!(
        "{}: objective {} with {} entries over {} tasks and {} agents, unique {}",
        args.method.name(),
        objective,
        plan.entries.len(),
        tasks.len(),
        agents.len(),
        unique
    );
    Ok(())
}
