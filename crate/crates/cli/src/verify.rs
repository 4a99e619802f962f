use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use odtalloc_core::analysis::{
    check_nestedness_1d, find_crossing_1d, verify_monge_1d, verify_nondegeneracy, verify_twist, ConditionReport,
};
use odtalloc_core::cost::reduced_cost_matrix;
use odtalloc_core::measures::index_pushforward;
use odtalloc_core::solver::MASS_TOLERANCE;
use odtalloc_core::{check_stability, cost_matrix, solve_exact, DiscreteMeasure, TaskSet, TransportPlan};

use crate::output::{load_instance, out_dir, read_input, write_json, Manifest, PlanFile};
use crate::{Check, Failure, VerifyArgs};

fn required<'a>(path: &'a Option<PathBuf>, flag: &str, check: Check) -> Result<&'a Path, Failure> {
    path.as_deref()
        .ok_or_else(|| Failure::Usage(format!("--check {} needs {flag}", check.name())))
}

fn instance(args: &VerifyArgs, manifest: &mut Manifest) -> Result<(TaskSet, DiscreteMeasure), Failure> {
    let tasks = required(&args.tasks, "--tasks", args.check)?;
    let agents = required(&args.agents, "--agents", args.check)?;
    load_instance(tasks, agents, manifest)
}

fn index_of(ids: &[String], what: &str) -> Result<HashMap<String, usize>, Failure> {
    let mut map = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), k).is_some() {
            return Err(Failure::Usage(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(map)
}

/// No crossing in the exact support of the reduced problem.
fn crossing_report(tasks: &TaskSet, agents: &DiscreteMeasure) -> Result<ConditionReport, Failure> {
    if tasks.dim() != 1 {
        return Err(Failure::Usage("--check monge on an instance needs 1-D inputs".into()));
    }
    let index = index_pushforward(tasks);
    let rc = reduced_cost_matrix(&index, agents).map_err(Failure::Solver)?;
    let (plan, _) = solve_exact(&rc, index.weights(), agents.weights()).map_err(Failure::Solver)?;
    let s: Vec<f64> = index.points().iter().map(|p| p[0]).collect();
    let y: Vec<f64> = agents.points().iter().map(|p| p[0]).collect();
    let crossing = find_crossing_1d(&plan, &s, &y);
    Ok(ConditionReport {
        condition: "monge".into(),
        passed: crossing.is_none(),
        samples: plan.entries.len(),
        worst_case: if crossing.is_some() { 1.0 } else { 0.0 },
        witness: crossing.map(|((i, k), (j, l))| vec![s[i], y[k], s[j], y[l]]),
    })
}

fn stability(args: &VerifyArgs, manifest: &mut Manifest) -> Result<ConditionReport, Failure> {
    let (tasks, agents) = instance(args, manifest)?;
    let plan_path = required(&args.plan, "--plan", args.check)?;
    let bytes = read_input(plan_path)?;
    manifest.add_input(plan_path, &bytes);
    let file: PlanFile = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::Usage(format!("cannot parse {}: {e}", plan_path.display())))?;
    let duals = file
        .duals
        .ok_or_else(|| Failure::Usage("plan has no dual potentials (entropic plans cannot be certified)".into()))?;

    let cost = cost_matrix(&tasks, &agents).map_err(Failure::Solver)?;
    let task_ix = index_of(tasks.ids(), "task")?;
    let agent_ix = index_of(agents.ids(), "agent")?;
    let mut entries = Vec::with_capacity(file.entries.len());
    for e in &file.entries {
        let i = *task_ix
            .get(&e.task)
            .ok_or_else(|| Failure::Usage(format!("plan names unknown task {:?}", e.task)))?;
        let j = *agent_ix
            .get(&e.agent)
            .ok_or_else(|| Failure::Usage(format!("plan names unknown agent {:?}", e.agent)))?;
        entries.push((i, j, e.mass));
    }
    let plan = TransportPlan::from_entries(&cost, entries);
    let tol = args.tol.unwrap_or(1e-8 * cost.max_abs().max(1.0));
    let report = check_stability(&plan, &duals, &cost, tol).map_err(|e| Failure::Usage(format!("{}: {e}", e.name())))?;
    let marginal = plan.marginal_violation(tasks.weights(), agents.weights());
    Ok(ConditionReport {
        condition: "stability".into(),
        passed: report.passed && marginal <= MASS_TOLERANCE,
        samples: plan.entries.len(),
        worst_case: report.max_violation.max(report.max_slack_on_support),
        witness: Some(vec![report.max_violation, report.max_slack_on_support, marginal]),
    })
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    let mut manifest = Manifest::new(args.seed, args.check.name());
    let report = match args.check {
        Check::Twist => manifest.time("check", || verify_twist(args.dim, args.samples, args.seed)).map_err(Failure::input)?,
        Check::Nondegeneracy => manifest
            .time("check", || verify_nondegeneracy(args.dim, args.samples, args.seed))
            .map_err(Failure::input)?,
        Check::Monge => {
            let sampled = manifest.time("check", || verify_monge_1d(args.samples, args.seed)).map_err(Failure::input)?;
            if args.tasks.is_some() || args.agents.is_some() {
                let (tasks, agents) = instance(args, &mut manifest)?;
                let support = manifest.time("support", || crossing_report(&tasks, &agents))?;
                if sampled.passed { support } else { sampled }
            } else {
                sampled
            }
        }
        Check::Nestedness => {
            let (tasks, agents) = instance(args, &mut manifest)?;
            manifest
                .time("check", || check_nestedness_1d(&tasks, &agents, args.grid))
                .map_err(Failure::input)?
        }
        Check::Stability => {
            let start = Instant::now();
            let report = stability(args, &mut manifest)?;
            manifest.record("check", start);
            report
        }
    };

    let dir = out_dir(&args.out)?;
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("manifest.json"), &manifest)?;
    println!(
        "{}: {} (worst case {}, {} samples)",
        report.condition,
        if report.passed { "PASS" } else { "FAIL" },
        report.worst_case,
        report.samples
    );
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Failed)
    }
}
