//! The `tanlift` command line.
//!
//! Every command reads one scenario and prints a JSON run report on stdout. With `--out`
//! (or `output.dir` in the scenario) the report and any CSV tables are also written to
//! that directory. Exit codes: 0 success, 1 negative verdict, 2 input error, 3 numerical
//! failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::{lift_identity_battery, BatteryConfig};
use crate::control::Trajectory;
use crate::error::{Error, Result};
use crate::flow::{ad_iterates, flow, IntegratorConfig};
use crate::lift::base_lie_bracket;
use crate::lifted::{
    bump_convergence, endpoint_closed_form, fiber_controllability_report, simulate_lifted_ode, steer_lifted,
};
use crate::manifold::TangentPoint;
use crate::scenario::{LiftedSetup, Scenario, VerticalSetup};
use crate::vertical::{
    fiber_controllable_vertical, reachable_vertical, simulate_vertical_general, simulate_vertical_ode,
    solve_vertical_closed_form, steer_vertical,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tanlift", version, about = "Tangent lifts of vector fields and control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario document (JSON).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,

    /// Seed for sampled test points.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// RK4 step size.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub step: f64,

    /// Segments of the transport grid.
    #[arg(long, global = true, default_value_t = 64)]
    pub grid: usize,

    /// Relative singular-value threshold for numerical rank.
    #[arg(long = "rank-tol", global = true, default_value_t = 1e-8)]
    pub rank_tol: f64,

    /// Directory for the JSON report and CSV tables.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the lift identities on the scenario's fields at seeded sample points.
    LiftCheck,
    /// Closed-form endpoint against direct integration, with the trajectory as CSV.
    Simulate,
    /// Rank tests for fiber controllability.
    Controllability,
    /// Reachable affine set, and a steering control when the scenario names a target.
    Reachable,
    /// Convergence of bump controls to transport columns.
    BumpConvergence,
    /// Pairwise brackets of the scenario's fields and the iterated brackets of the drift.
    Brackets,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LiftCheck => "lift-check",
            Command::Simulate => "simulate",
            Command::Controllability => "controllability",
            Command::Reachable => "reachable",
            Command::BumpConvergence => "bump-convergence",
            Command::Brackets => "brackets",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub step: f64,
    pub max_steps: usize,
    pub grid: usize,
    pub rank_tol: f64,
    pub diff_step: f64,
}

/// The deterministic part of a run; wall-clock time goes to stderr only.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub config: ResolvedConfig,
    pub result: Value,
}

pub struct Outcome {
    pub report: RunReport,
    pub negative: bool,
    /// (file name, contents)
    pub tables: Vec<(String, String)>,
    pub out_dir: Option<PathBuf>,
}

struct Ctx<'a> {
    cli: &'a Cli,
    scenario: &'a Scenario,
    integrator: IntegratorConfig,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_NUMERIC
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    match execute(&cli) {
        Ok(outcome) => {
            let text = report_json(&outcome.report);
            if let Err(e) = write_outputs(&outcome, &text) {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
            println!("{text}");
            eprintln!(
                "tanlift {}: finished in {:.1} ms",
                outcome.report.command,
                started.elapsed().as_secs_f64() * 1e3
            );
            if outcome.negative {
                EXIT_NEGATIVE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

fn write_outputs(outcome: &Outcome, text: &str) -> Result<()> {
    let Some(dir) = &outcome.out_dir else {
        return Ok(());
    };
    let io = |e: std::io::Error, p: &Path| Error::invalid(format!("cannot write {}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let path = dir.join(format!("{}.json", outcome.report.command));
    std::fs::write(&path, format!("{text}\n")).map_err(|e| io(e, &path))?;
    for (name, contents) in &outcome.tables {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io(e, &path))?;
    }
    Ok(())
}

/// Runs the parsed command without touching stdout or the filesystem.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| Error::Invalid("--scenario <path> is required".into()))?;
    let scenario = Scenario::load(path)?;
    if !(cli.step > 0.0) || !(cli.rank_tol >= 0.0) || cli.grid < 2 {
        return Err(Error::Invalid("--step must be positive, --rank-tol non-negative and --grid at least 2".into()));
    }
    let integrator = IntegratorConfig::with_step(cli.step);
    let ctx = Ctx {
        cli,
        scenario: &scenario,
        integrator,
    };
    let (result, negative, tables) = match cli.command {
        Command::LiftCheck => lift_check(&ctx)?,
        Command::Simulate => simulate(&ctx)?,
        Command::Controllability => controllability(&ctx)?,
        Command::Reachable => reachable(&ctx)?,
        Command::BumpConvergence => bump(&ctx)?,
        Command::Brackets => brackets(&ctx)?,
    };
    Ok(Outcome {
        report: RunReport {
            tool: "tanlift",
            version: env!("CARGO_PKG_VERSION"),
            command: cli.command.name(),
            scenario: scenario.name.clone(),
            seed: cli.seed,
            config: ResolvedConfig {
                step: integrator.step,
                max_steps: integrator.max_steps,
                grid: cli.grid,
                rank_tol: cli.rank_tol,
                diff_step: crate::manifold::DiffConfig::default().step,
            },
            result,
        },
        negative,
        tables,
        out_dir: cli
            .out
            .clone()
            .or_else(|| scenario.output.as_ref().and_then(|o| o.dir.as_ref()).map(PathBuf::from)),
    })
}

type Payload = (Value, bool, Vec<(String, String)>);

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn point_json(v: &TangentPoint) -> Value {
    json!({ "base": v.base.as_slice(), "fiber": v.fiber.as_slice() })
}

fn need<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Invalid(format!("scenario has no {what}")))
}

fn lift_check(ctx: &Ctx) -> Result<Payload> {
    let fields = ctx.scenario.build_fields()?;
    let spec = ctx.scenario.lift_check.clone().unwrap_or_default();
    let selected: Vec<_> = match &spec.fields {
        Some(names) => names.iter().map(|n| fields[n].clone()).collect(),
        None => fields.values().cloned().collect(),
    };
    if selected.len() < 2 {
        return Err(Error::Invalid("lift-check needs at least two fields".into()));
    }
    let defaults = BatteryConfig::default();
    let cfg = BatteryConfig {
        samples: spec.samples.unwrap_or(defaults.samples),
        margin: spec.margin.unwrap_or(defaults.margin),
        seed: ctx.cli.seed,
        ..defaults
    };
    let report = lift_identity_battery(&selected, &ctx.scenario.build_functions()?, &cfg)?;
    Ok((to_value(&report), !report.all_passed, Vec::new()))
}

fn max_base_motion(tr: &Trajectory) -> f64 {
    let b0 = &tr.points[0].base;
    tr.points.iter().map(|p| (&p.base - b0).amax()).fold(0.0, f64::max)
}

fn simulate_vertical(ctx: &Ctx, setup: &VerticalSetup) -> Result<(Value, Option<String>)> {
    let Some(u) = &setup.control else {
        return Ok((
            json!({
                "horizon": 0.0,
                "closed_form": point_json(&setup.initial),
                "ode": point_json(&setup.initial),
                "discrepancy": 0.0,
            }),
            None,
        ));
    };
    let tr = match (&setup.dynamics, &setup.affine) {
        (Some(d), _) => simulate_vertical_general(&ctx.scenario.chart()?, d, &setup.initial, u, &ctx.integrator)?,
        (None, Some(sys)) => simulate_vertical_ode(sys, &setup.initial, u, &ctx.integrator)?,
        (None, None) => unreachable!("validated scenario"),
    };
    let end = tr.last();
    let closed = match (&setup.dynamics, &setup.affine) {
        (None, Some(sys)) => Some(solve_vertical_closed_form(sys, &setup.initial, u, setup.horizon)?),
        _ => None,
    };
    let discrepancy = closed.as_ref().map(|c| (&c.fiber - &end.fiber).amax());
    let value = json!({
        "horizon": setup.horizon,
        "closed_form": closed.as_ref().map(point_json),
        "ode": point_json(end),
        "discrepancy": discrepancy,
        "max_base_motion": max_base_motion(&tr),
        "samples": tr.points.len(),
    });
    Ok((value, Some(tr.to_csv())))
}

fn simulate_lifted(ctx: &Ctx, setup: &LiftedSetup) -> Result<(Value, Option<String>)> {
    let Some(u) = &setup.control else {
        return Ok((
            json!({
                "horizon": 0.0,
                "closed_form": point_json(&setup.initial),
                "ode": point_json(&setup.initial),
                "discrepancy": 0.0,
            }),
            None,
        ));
    };
    let closed = endpoint_closed_form(&setup.system, &setup.initial, u, ctx.cli.grid, &ctx.integrator)?;
    let tr = simulate_lifted_ode(&setup.system, &setup.initial, u, &ctx.integrator)?;
    let end = tr.last();
    let value = json!({
        "horizon": setup.horizon,
        "grid": crate::lifted::aligned_grid(ctx.cli.grid, u.segments()),
        "closed_form": point_json(&closed),
        "ode": point_json(end),
        "discrepancy": (&closed.fiber - &end.fiber).amax().max((&closed.base - &end.base).amax()),
    });
    Ok((value, Some(tr.to_csv())))
}

fn simulate(ctx: &Ctx) -> Result<Payload> {
    let fields = ctx.scenario.build_fields()?;
    let vertical = ctx.scenario.vertical(&fields)?;
    let lifted = ctx.scenario.lifted(&fields)?;
    if vertical.is_none() && lifted.is_none() {
        return Err(Error::Invalid("simulate needs a vertical_system or lifted_system block".into()));
    }
    let mut result = serde_json::Map::new();
    let mut tables = Vec::new();
    if let Some(setup) = &vertical {
        let (value, csv) = simulate_vertical(ctx, setup)?;
        result.insert("vertical".into(), value);
        tables.extend(csv.map(|c| ("vertical-trajectory.csv".to_string(), c)));
    }
    if let Some(setup) = &lifted {
        let (value, csv) = simulate_lifted(ctx, setup)?;
        result.insert("lifted".into(), value);
        tables.extend(csv.map(|c| ("lifted-trajectory.csv".to_string(), c)));
    }
    Ok((Value::Object(result), false, tables))
}

fn controllability(ctx: &Ctx) -> Result<Payload> {
    let fields = ctx.scenario.build_fields()?;
    let vertical = ctx.scenario.vertical(&fields)?;
    let lifted = ctx.scenario.lifted(&fields)?;
    if vertical.is_none() && lifted.is_none() {
        return Err(Error::Invalid("controllability needs a vertical_system or lifted_system block".into()));
    }
    let mut result = serde_json::Map::new();
    let mut negative = false;
    if let Some(setup) = &vertical {
        let sys = need(setup.affine.as_ref(), "vertical control fields")?;
        let report = fiber_controllable_vertical(sys, &setup.initial.base, ctx.cli.rank_tol)?;
        negative |= !report.controllable;
        result.insert(
            "vertical".into(),
            json!({ "rank": report.basis.rank, "controllable": report.controllable, "basis": report.basis }),
        );
    }
    if let Some(setup) = &lifted {
        let reports = setup
            .horizons
            .iter()
            .map(|&t| {
                fiber_controllability_report(
                    &setup.system,
                    &setup.initial,
                    t,
                    ctx.cli.grid,
                    setup.k_max,
                    ctx.cli.rank_tol,
                    &ctx.integrator,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let transport = reports.iter().all(|r| r.transport_controllable);
        let bracket = reports.first().is_some_and(|r| r.bracket_controllable);
        negative |= !transport;
        result.insert(
            "lifted".into(),
            json!({
                "transport_controllable": transport,
                "bracket_controllable": bracket,
                "bracket_depth": reports.first().and_then(|r| r.ad.depth),
                "k_max": setup.k_max,
                "reports": reports,
            }),
        );
    }
    Ok((Value::Object(result), negative, Vec::new()))
}

fn reachable(ctx: &Ctx) -> Result<Payload> {
    let fields = ctx.scenario.build_fields()?;
    let vertical = ctx.scenario.vertical(&fields)?;
    let lifted = ctx.scenario.lifted(&fields)?;
    if vertical.is_none() && lifted.is_none() {
        return Err(Error::Invalid("reachable needs a vertical_system or lifted_system block".into()));
    }
    let mut result = serde_json::Map::new();
    let mut tables = Vec::new();
    if let Some(setup) = &vertical {
        let sys = need(setup.affine.as_ref(), "vertical control fields")?;
        let set = reachable_vertical(sys, &setup.initial, setup.horizon, ctx.cli.rank_tol)?;
        let mut value = json!({ "horizon": setup.horizon, "set": set });
        if let Some(target) = &setup.target {
            let u = steer_vertical(sys, &setup.initial, target, setup.horizon, 1e-10)?;
            let reached = solve_vertical_closed_form(sys, &setup.initial, &u, setup.horizon)?;
            value["steering"] = json!({
                "target": target.as_slice(),
                "control": u.values(),
                "reached": point_json(&reached),
                "residual": (&reached.fiber - target).norm(),
            });
        }
        result.insert("vertical".into(), value);
    }
    if let Some(setup) = &lifted {
        let t = setup.horizon;
        let report = fiber_controllability_report(
            &setup.system,
            &setup.initial,
            t,
            ctx.cli.grid,
            setup.k_max,
            ctx.cli.rank_tol,
            &ctx.integrator,
        )?;
        let mut value = json!({
            "horizon": t,
            "base_endpoint": report.base_endpoint,
            "anchor": report.anchor,
            "basis": report.image_basis,
        });
        if let Some(spec) = &setup.target {
            let base = match &spec.base {
                Some(b) => DVector::from_column_slice(b),
                None => flow(&setup.system.drift, &setup.initial.base, t, &ctx.integrator)?
                    .final_state()
                    .clone(),
            };
            let target = TangentPoint::new(base, DVector::from_column_slice(&spec.fiber))?;
            let u = steer_lifted(&setup.system, &setup.initial, &target, t, ctx.cli.grid, 1e-8, &ctx.integrator)?;
            let reached = endpoint_closed_form(&setup.system, &setup.initial, &u, ctx.cli.grid, &ctx.integrator)?;
            let mut csv = String::from("segment");
            for i in 1..=u.inputs() {
                csv.push_str(&format!(",u{i}"));
            }
            csv.push('\n');
            for (k, row) in u.values().iter().enumerate() {
                csv.push_str(&k.to_string());
                for v in row {
                    csv.push_str(&format!(",{v:.16e}"));
                }
                csv.push('\n');
            }
            tables.push(("lifted-steering-control.csv".to_string(), csv));
            value["steering"] = json!({
                "target": point_json(&target),
                "segments": u.segments(),
                "reached": point_json(&reached),
                "residual": (&reached.fiber - &target.fiber).norm(),
            });
        }
        result.insert("lifted".into(), value);
    }
    Ok((Value::Object(result), false, tables))
}

fn bump(ctx: &Ctx) -> Result<Payload> {
    let fields = ctx.scenario.build_fields()?;
    let setup = need(ctx.scenario.lifted(&fields)?, "lifted_system block")?;
    let spec = setup.bump.clone();
    let t0 = spec.as_ref().and_then(|b| b.t0).unwrap_or(setup.horizon / 2.0);
    let input = spec.as_ref().map(|b| b.input).unwrap_or(0);
    let divisors = spec.and_then(|b| b.divisors).unwrap_or_else(|| vec![8, 16, 32]);
    let study = bump_convergence(
        &setup.system,
        &setup.initial.base,
        setup.horizon,
        t0,
        input,
        &divisors,
        ctx.cli.grid,
        &ctx.integrator,
    )?;
    let mut csv = String::from("eps,error\n");
    for s in &study.samples {
        csv.push_str(&format!("{:.16e},{:.16e}\n", s.eps, s.error));
    }
    Ok((to_value(&study), false, vec![("bump-convergence.csv".to_string(), csv)]))
}

fn brackets(ctx: &Ctx) -> Result<Payload> {
    let fields = ctx.scenario.build_fields()?;
    let vertical = ctx.scenario.vertical(&fields)?;
    let lifted = ctx.scenario.lifted(&fields)?;
    let point = match (&lifted, &vertical) {
        (Some(l), _) => l.initial.base.clone(),
        (None, Some(v)) => v.initial.base.clone(),
        (None, None) => return Err(Error::Invalid("brackets needs a system block to supply a base point".into())),
    };
    let names: Vec<&String> = fields.keys().collect();
    let mut pairs = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let br = base_lie_bracket(&fields[*a], &fields[*b])?;
            pairs.push(json!({
                "bracket": br.name(),
                "expressions": br.expressions().map(|e| e.iter().map(ToString::to_string).collect::<Vec<_>>()),
                "value": br.eval(&point)?.as_slice(),
            }));
        }
    }
    let mut result = json!({ "point": point.as_slice(), "pairs": pairs });
    if let Some(setup) = &lifted {
        let mut table = Vec::new();
        for x in &setup.system.controls {
            for (k, z) in ad_iterates(&setup.system.drift, x, setup.k_max)?.iter().enumerate() {
                table.push(json!({
                    "field": x.name(),
                    "k": k,
                    "expressions": z.expressions().map(|e| e.iter().map(ToString::to_string).collect::<Vec<_>>()),
                    "value": z.eval(&point)?.as_slice(),
                }));
            }
        }
        let ad = crate::lifted::ad_criterion(&setup.system, &point, setup.k_max, ctx.cli.rank_tol)?;
        result["ad"] = json!({ "iterates": table, "rank_by_depth": ad.rank_by_depth, "depth": ad.depth });
    }
    Ok((result, false, Vec::new()))
}
