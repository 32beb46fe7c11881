//! `mobiplan`: command-line front end.
//!
//! Exit codes: 0 success, 2 task failure, 3 configuration or input error,
//! 4 external tool error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mobiplan_core::emulator::{
    execute, load_replays, load_suite, load_world, parse_any, Arms, DoorSetting, OperatorTable, RunOptions,
};
use mobiplan_core::expand::{expand_all, AnchorAlias, ExpansionOptions, NameTable};
use mobiplan_core::forge::{synthesize, RobotConfig};
use mobiplan_core::grounding::{GrounderSpec, GroundingResult, RetrieverSpec};
use mobiplan_core::pddl::{parse_condition, parse_domain, parse_plan, parse_problem, print_domain, print_problem};
use mobiplan_core::pipeline::{
    pretty_json, run_bench, write_artifacts, BenchOptions, Pipeline, PipelineConfig, RunReport,
};
use mobiplan_core::planner::{
    ground_task_with, high_level_steps, refine_plan, solve_external, solve_optimal, validate_plan, ExternalError,
    ExternalPlanner, GroundOptions, PlanError, SearchLimits,
};
use mobiplan_core::topo::{compress, load_map, CompressOptions, CompressedMap};

#[derive(Parser)]
#[command(name = "mobiplan", version, about = "Mobile-manipulation task planning over topological maps")]
struct Cli {
    /// Print the JSON report on stdout instead of the summary.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Turn a tabletop domain into a mobile one.
    Expand(ExpandArgs),
    /// Compress a map around key nodes.
    Compress(CompressArgs),
    /// Build a problem from a compressed map, a grounding and a robot.
    Synthesize(SynthArgs),
    /// Solve a problem optimally or with an external planner.
    Plan(PlanArgs),
    /// Expand abstract moves into waypoint hops.
    Refine(RefineArgs),
    /// Run plans in the emulator.
    Simulate(SimArgs),
    /// Run every stage for one instruction.
    Pipeline(PipelineArgs),
    /// Run a task suite.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Names {
    /// robot_at_node, object_at_node, robot_has_hand
    Appendix,
    /// rob_at_node, obj_at_node, rob_has_hand
    Main,
    Long,
    Short,
}

impl Names {
    fn table(self) -> NameTable {
        match self {
            Names::Appendix | Names::Long => NameTable::long(),
            Names::Main | Names::Short => NameTable::short(),
        }
    }
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    single_arm: bool,
    #[arg(long)]
    no_doors: bool,
    #[arg(long)]
    no_costs: bool,
    #[arg(long, value_enum, default_value = "appendix")]
    names: Names,
    /// `name=hand_free` or `name=holding`; repeatable.
    #[arg(long = "anchor-alias")]
    anchor_alias: Vec<String>,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long)]
    map: PathBuf,
    /// Comma-separated key nodes.
    #[arg(long, value_delimiter = ',', required = true)]
    keys: Vec<String>,
    /// Robot start node.
    #[arg(long)]
    robot: String,
    #[arg(long)]
    keep_all_doors: bool,
    /// Treat every door as open.
    #[arg(long)]
    all_doors_open: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    compressed: PathBuf,
    #[arg(long)]
    grounding: PathBuf,
    #[arg(long, default_value = "robot")]
    robot: String,
    #[arg(long, value_delimiter = ',', default_value = "hand")]
    hands: Vec<String>,
    #[arg(long)]
    start: String,
    #[arg(long, value_enum, default_value = "appendix")]
    names: Names,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineKind {
    Internal,
    External,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "internal")]
    engine: EngineKind,
    /// Command template with {domain}, {problem} and {plan}.
    #[arg(long)]
    cmd: Option<String>,
    #[arg(long, default_value_t = 300.0)]
    max_seconds: f64,
    #[arg(long, default_value_t = 10_000_000)]
    max_expansions: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    compressed: PathBuf,
    #[arg(long, value_enum, default_value = "appendix")]
    names: Names,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArmsArg {
    Single,
    Dual,
}

#[derive(Clone, Copy, ValueEnum)]
enum DoorsArg {
    AsMapped,
    AllOpen,
}

#[derive(Args)]
struct SimArgs {
    /// Replay manifest; runs every entry and checks its expectation.
    #[arg(long, conflicts_with_all = ["plan", "world", "map", "goal"])]
    manifest: Option<PathBuf>,
    #[arg(long, requires_all = ["world", "map", "goal"])]
    plan: Option<PathBuf>,
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
    /// Goal such as "(and (on apple_1 desk_1) (not (is_open fridge_1)))".
    #[arg(long)]
    goal: Option<String>,
    #[arg(long, value_enum, default_value = "single")]
    arms: ArmsArg,
    #[arg(long, value_enum, default_value = "as-mapped")]
    doors: DoorsArg,
    /// Operator table JSON replacing the built-in one.
    #[arg(long)]
    operators: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "appendix")]
    names: Names,
    /// Reject moves to non-adjacent nodes instead of routing them.
    #[arg(long)]
    no_route: bool,
    /// Use plan names as world ids verbatim.
    #[arg(long)]
    no_ground: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    instruction: String,
    /// fixture:<path>, keyword or remote
    #[arg(long)]
    retriever: Option<String>,
    /// fixture:<path> or remote
    #[arg(long)]
    grounder: Option<String>,
    #[arg(long, value_delimiter = ',')]
    hands: Option<Vec<String>>,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    all_doors_open: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    suite: PathBuf,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    parallelism: Option<usize>,
    /// `name=dir` of baseline plans; repeatable.
    #[arg(long)]
    baseline: Vec<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Error tagged with its exit code.
struct Fail(u8, anyhow::Error);

fn config<E: Into<anyhow::Error>>(e: E) -> Fail {
    Fail(3, e.into())
}

trait OrConfig<T> {
    fn cfg(self) -> Result<T, Fail>;
}

impl<T, E: Into<anyhow::Error>> OrConfig<T> for Result<T, E> {
    fn cfg(self) -> Result<T, Fail> {
        self.map_err(config)
    }
}

/// What a command hands back: its report, a summary, and whether the task succeeded.
struct Outcome {
    report: Value,
    summary: String,
    ok: bool,
}

fn read(p: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).cfg()
}

fn write(p: &Path, text: &str) -> Result<(), Fail> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).cfg()?;
    }
    std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())).cfg()
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn cmd_expand(a: &ExpandArgs) -> Result<Outcome, Fail> {
    let d = parse_domain(&read(&a.domain)?).cfg()?;
    let aliases = a
        .anchor_alias
        .iter()
        .map(|s| AnchorAlias::parse(s).ok_or_else(|| anyhow!("bad anchor alias {s:?}; expected name=hand_free|holding")))
        .collect::<Result<Vec<_>, _>>()
        .cfg()?;
    let o = ExpansionOptions {
        bimanual: !a.single_arm,
        doors: !a.no_doors,
        costs: !a.no_costs,
        names: a.names.table(),
        aliases,
        ..Default::default()
    };
    let (out, binding) = expand_all(&d, &o).map_err(|e| Fail(2, e.into()))?;
    write(&a.out, &print_domain(&out))?;
    Ok(Outcome {
        report: json!({
            "domain": out.name.to_string(),
            "actions": out.actions.len(),
            "predicates": out.predicates.len(),
            "alias_rewrites": binding.alias_rewrites,
            "out": a.out,
        }),
        summary: format!("expanded {} into {} actions -> {}", d.name, out.actions.len(), a.out.display()),
        ok: true,
    })
}

fn cmd_compress(a: &CompressArgs) -> Result<Outcome, Fail> {
    let mut m = load_map(read(&a.map)?.as_bytes()).cfg()?;
    if a.all_doors_open {
        m = m.with_doors_open();
    }
    let c = compress(&m, &a.keys, &a.robot, CompressOptions { keep_all_doors: a.keep_all_doors }).cfg()?;
    write(&a.out, &c.to_json())?;
    Ok(Outcome {
        report: json!({"nodes": c.nodes, "shortcuts": c.shortcuts.len(), "doors": c.doors.len(), "out": a.out}),
        summary: format!(
            "{} raw nodes -> {} nodes, {} shortcuts, {} doors -> {}",
            m.nodes().len(),
            c.nodes.len(),
            c.shortcuts.len(),
            c.doors.len(),
            a.out.display()
        ),
        ok: true,
    })
}

fn cmd_synthesize(a: &SynthArgs) -> Result<Outcome, Fail> {
    let d = parse_domain(&read(&a.domain)?).cfg()?;
    let c = CompressedMap::from_json(&read(&a.compressed)?).cfg()?;
    let g = GroundingResult::from_json(&read(&a.grounding)?).cfg()?;
    let hands: Vec<&str> = a.hands.iter().map(String::as_str).collect();
    let r = RobotConfig::new(&a.robot, &hands, &a.start);
    let p = synthesize(&d, &c, &g, &r, &a.names.table()).map_err(|e| Fail(2, e.into()))?;
    write(&a.out, &print_problem(&p))?;
    Ok(Outcome {
        report: json!({"objects": p.objects.len(), "init": p.init.len(), "goal": p.goal.len(), "out": a.out}),
        summary: format!("{} objects, {} initial facts -> {}", p.objects.len(), p.init.len(), a.out.display()),
        ok: true,
    })
}

fn plan_failure(e: PlanError) -> Fail {
    Fail(2, e.into())
}

fn external_failure(e: ExternalError) -> Fail {
    match e {
        ExternalError::Unsolvable(_) => Fail(2, e.into()),
        ExternalError::MissingPlaceholder(_) => Fail(3, e.into()),
        _ => Fail(4, e.into()),
    }
}

fn cmd_plan(a: &PlanArgs) -> Result<Outcome, Fail> {
    let dt = read(&a.domain)?;
    let pt = read(&a.problem)?;
    let d = parse_domain(&dt).cfg()?;
    let p = parse_problem(&pt).cfg()?;
    let task = ground_task_with(&d, &p, &GroundOptions::default()).map_err(plan_failure)?;
    let (plan, cost, stats) = match a.engine {
        EngineKind::Internal => {
            let lim = SearchLimits { max_expansions: a.max_expansions, max_seconds: a.max_seconds, ..Default::default() };
            let sol = solve_optimal(&task, &lim).map_err(plan_failure)?;
            (sol.plan, sol.cost, Some(sol.stats))
        }
        EngineKind::External => {
            let cmd = a.cmd.clone().ok_or_else(|| config(anyhow!("--engine external needs --cmd")))?;
            let mut cfg = ExternalPlanner::new(cmd);
            cfg.timeout = std::time::Duration::try_from_secs_f64(a.max_seconds).cfg()?;
            let mut plan = solve_external(&dt, &pt, &cfg).map_err(external_failure)?;
            let v = validate_plan(&task, &plan).map_err(plan_failure)?;
            if !v.is_valid() {
                return Err(Fail(4, anyhow!("external plan does not validate: {:?}", v.violation)));
            }
            plan.reported_cost = Some(v.cost);
            (plan, v.cost, None)
        }
    };
    write(&a.out, &plan.to_string())?;
    Ok(Outcome {
        report: json!({"cost": cost, "steps": plan.steps.len(), "search": stats, "out": a.out}),
        summary: format!("{} steps, cost {cost} -> {}", plan.steps.len(), a.out.display()),
        ok: true,
    })
}

fn cmd_refine(a: &RefineArgs) -> Result<Outcome, Fail> {
    let plan = parse_plan(&read(&a.plan)?).cfg()?;
    let c = CompressedMap::from_json(&read(&a.compressed)?).cfg()?;
    let names = a.names.table();
    let refined = refine_plan(&plan, &c, &names).map_err(plan_failure)?;
    write(&a.out, &refined.to_string())?;
    let hl = high_level_steps(&refined, &names);
    Ok(Outcome {
        report: json!({"abstract_steps": plan.steps.len(), "refined_steps": refined.steps.len(), "high_level_steps": hl, "out": a.out}),
        summary: format!("{} abstract steps -> {} refined steps -> {}", plan.steps.len(), refined.steps.len(), a.out.display()),
        ok: true,
    })
}

fn arms(a: ArmsArg) -> Arms {
    match a {
        ArmsArg::Single => Arms::Single,
        ArmsArg::Dual => Arms::Dual,
    }
}

fn doors(d: DoorsArg) -> DoorSetting {
    match d {
        DoorsArg::AsMapped => DoorSetting::AsMapped,
        DoorsArg::AllOpen => DoorSetting::AllOpen,
    }
}

fn cmd_simulate(a: &SimArgs) -> Result<Outcome, Fail> {
    let opts = RunOptions { expand_moves: !a.no_route, ground_names: !a.no_ground };
    let table_for = |arms: Arms| -> Result<OperatorTable, Fail> {
        match &a.operators {
            Some(p) => OperatorTable::from_json(&read(p)?).cfg(),
            None => Ok(OperatorTable::builtin(arms, &a.names.table())),
        }
    };
    if let Some(path) = &a.manifest {
        let m = load_replays(path).cfg()?;
        let map = Arc::new(load_map(read(&m.map)?.as_bytes()).cfg()?);
        let world_text = read(&m.world)?;
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        let mut all_ok = true;
        for r in &m.replays {
            let w = load_world(&world_text, map.clone(), r.doors, &r.arms.hands()).cfg()?;
            let actions = parse_any(&read(&r.plan)?, &table_for(r.arms)?, &w.robot).cfg()?;
            let goal = parse_condition(&r.goal).cfg()?;
            let (res, _) = execute(&w, &actions, &goal, opts);
            let diff = r.expect.check(&res);
            all_ok &= diff.is_empty();
            let verdict = if diff.is_empty() { "ok" } else { "MISMATCH" };
            let what = match &res.failure {
                None => "success".to_string(),
                Some(f) => format!("{} at step {} (high-level {})", f.code, f.step, f.high_level_step),
            };
            lines.push(format!("{verdict:8} {:28} {what}", r.name));
            rows.push(json!({"name": r.name, "result": res, "expected": r.expect, "mismatches": diff}));
        }
        return Ok(Outcome { report: json!({"replays": rows}), summary: lines.join("\n"), ok: all_ok });
    }
    let (Some(plan), Some(world), Some(map), Some(goal)) = (&a.plan, &a.world, &a.map, &a.goal) else {
        return Err(config(anyhow!("give --manifest or all of --plan, --world, --map and --goal")));
    };
    let map = Arc::new(load_map(read(map)?.as_bytes()).cfg()?);
    let w = load_world(&read(world)?, map, doors(a.doors), &arms(a.arms).hands()).cfg()?;
    let actions = parse_any(&read(plan)?, &table_for(arms(a.arms))?, &w.robot).cfg()?;
    let goal = parse_condition(goal).cfg()?;
    let (res, _) = execute(&w, &actions, &goal, opts);
    let summary = match &res.failure {
        None => format!("success: {} steps ({} high-level), cost {}", res.executed_steps, res.high_level_steps, res.total_cost),
        Some(f) => format!("failed: {} at step {} (high-level {}): {}", f.code, f.step, f.high_level_step, f.detail),
    };
    Ok(Outcome { ok: res.success, report: to_value(&res), summary })
}

fn load_pipeline(path: &Path, tweak: impl FnOnce(&mut PipelineConfig) -> Result<(), Fail>) -> Result<Pipeline, Fail> {
    let mut cfg = PipelineConfig::load(path).cfg()?;
    tweak(&mut cfg)?;
    cfg.validate().cfg()?;
    Pipeline::new(cfg).cfg()
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<Outcome, Fail> {
    let p = load_pipeline(&a.config, |c| {
        if let Some(r) = &a.retriever {
            c.retriever = Some(RetrieverSpec::parse(r, Path::new(""), &c.remote).map_err(|e| config(anyhow!(e)))?);
        }
        if let Some(g) = &a.grounder {
            c.grounder = Some(GrounderSpec::parse(g, Path::new(""), &c.remote).map_err(|e| config(anyhow!(e)))?);
        }
        if let Some(h) = &a.hands {
            c.robot.hands = h.clone();
        }
        if let Some(s) = &a.start {
            c.robot.start = s.clone();
        }
        if let Some(d) = &a.out_dir {
            c.out_dir = d.clone();
        }
        Ok(())
    })?;
    let mut input = p.default_input(&a.instruction).cfg()?;
    input.all_doors_open = a.all_doors_open;
    let run = p.run(&input);
    let report = RunReport::new(&a.instruction, &run, &p);
    write_artifacts(&p.config.out_dir, &p, input.robot.hands.len(), &report, &run).cfg()?;
    let dir = p.config.out_dir.display();
    match &run {
        Ok(r) => Ok(Outcome {
            summary: format!(
                "cost {}: {} abstract steps, {} refined steps; artifacts in {dir}",
                r.cost,
                r.plan.steps.len(),
                r.refined.steps.len()
            ),
            report: to_value(&report),
            ok: true,
        }),
        Err((e, _)) if e.tool_failure => Err(Fail(4, anyhow!("{e}"))),
        Err((e, _)) => Ok(Outcome { summary: format!("{e}; report in {dir}"), report: to_value(&report), ok: false }),
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<Outcome, Fail> {
    let p = load_pipeline(&a.config, |c| {
        if let Some(d) = &a.out_dir {
            c.out_dir = d.clone();
        }
        if let Some(n) = a.parallelism {
            c.parallelism = n;
        }
        Ok(())
    })?;
    let suite = load_suite(&a.suite).cfg()?;
    let baselines = a
        .baseline
        .iter()
        .map(|s| match s.split_once('=') {
            Some((n, d)) => Ok((n.to_string(), PathBuf::from(d))),
            None => Err(config(anyhow!("baseline {s:?} should be name=dir"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let opts = BenchOptions { repeats: a.repeats, parallelism: p.config.parallelism, baselines };
    let out = run_bench(&p, &suite, &opts).map_err(|e| config(anyhow!(e)))?;
    let dir = &p.config.out_dir;
    write(&dir.join("report.json"), &pretty_json(&out.report))?;
    write(&dir.join("timings.json"), &pretty_json(&out.timings))?;
    let r = &out.report;
    let mut lines = vec![format!("success rate {} over {} tasks x {} repeats", r.overall_display, r.tasks.len(), r.repeats)];
    for s in &r.settings {
        lines.push(format!("  {:?}/{:?} ({} tasks): {}", s.arms, s.doors, s.tasks, s.display));
    }
    if let Some(h) = r.mean_high_level_steps {
        lines.push(format!("mean high-level steps {h:.2}"));
    }
    for b in &r.baselines {
        match (&b.rpqg, &b.rpqg_error) {
            (Some(g), _) => lines.push(format!("RPQG vs {}: {g} over {} tasks", b.name, b.common_tasks)),
            (None, e) => lines.push(format!("RPQG vs {}: n/a ({})", b.name, e.as_deref().unwrap_or("?"))),
        }
    }
    for t in r.tasks.iter().filter(|t| !t.runs.iter().all(|x| x.success)) {
        lines.push(format!("  failed: {}", t.id));
    }
    lines.push(format!("reports in {}", dir.display()));
    let ok = r.tasks.iter().all(|t| t.runs.iter().all(|x| x.success));
    Ok(Outcome { report: to_value(r), summary: lines.join("\n"), ok })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Expand(a) => cmd_expand(a),
        Cmd::Compress(a) => cmd_compress(a),
        Cmd::Synthesize(a) => cmd_synthesize(a),
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Refine(a) => cmd_refine(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Pipeline(a) => cmd_pipeline(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    let (report, code) = match result {
        Ok(o) => {
            if !cli.json {
                println!("{}", o.summary);
            }
            (o.report, if o.ok { 0 } else { 2 })
        }
        Err(Fail(code, e)) => {
            eprintln!("error: {e:#}");
            (json!({"error": format!("{e:#}"), "exit_code": code}), code)
        }
    };
    if cli.json {
        println!("{}", pretty_json(&report).trim_end());
    }
    if let Some(p) = &cli.report {
        if let Err(e) = std::fs::write(p, pretty_json(&report)) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return ExitCode::from(3);
        }
    }
    log::debug!("exit code {code}");
    ExitCode::from(code)
}
