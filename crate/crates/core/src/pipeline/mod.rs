//! End-to-end runs (retrieve, compress, ground, synthesize, solve, refine)
//! and the benchmark harness over a task suite.

mod bench;
mod config;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::emulator::Arms;
use crate::expand::{expand_all, ExpandError, ExpansionOptions};
use crate::forge::{synthesize, ForgeError, RobotConfig};
use crate::grounding::{ground_scene, retrieve_nodes, GrounderSpec, GroundingError, GroundingResult, RetrieverSpec, SceneRequest, TextualIndex};
use crate::pddl::{parse_domain, print_domain, print_problem, Domain, Plan, Problem};
use crate::planner::{
    ground_task_with, high_level_steps, refine_plan, solve_external, solve_optimal, validate_plan, ExternalError, GroundOptions,
    PlanError, SearchStats,
};
use crate::topo::{compress, load_map, CompressOptions, CompressedMap, TopoMap};

pub use bench::{run_bench, BaselineReport, BaselineTask, BenchOptions, BenchOutput, BenchReport, SettingReport, TaskReport, TaskRun};
pub use config::{ConfigError, Engine, PipelineConfig};

/// Failure classes for a pipeline run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FailureCategory {
    /// Wrong or missing nodes.
    #[serde(rename = "Retrieval")]
    Retrieval,
    /// The grounder produced nothing usable.
    #[serde(rename = "Perception-Grounding")]
    PerceptionGrounding,
    /// Facts that make an ill-formed or unsolvable problem.
    #[serde(rename = "PDDL-Grounding")]
    PddlGrounding,
    /// The search or the external planner gave up or misbehaved.
    #[serde(rename = "Planning")]
    Planning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Retrieve,
    Compress,
    Ground,
    Synthesize,
    Solve,
    Refine,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageError {
    pub stage: Stage,
    pub category: FailureCategory,
    pub message: String,
    /// The external planner could not be run at all.
    #[serde(skip)]
    pub tool_failure: bool,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} stage failed ({:?}): {}", self.stage, self.category, self.message)
    }
}

impl std::error::Error for StageError {}

fn err(stage: Stage, category: FailureCategory, e: impl ToString) -> StageError {
    StageError { stage, category, message: e.to_string(), tool_failure: false }
}

/// Wall-clock seconds per stage plus remote call counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub retrieval: f64,
    pub grounding: f64,
    pub compress: f64,
    pub synthesize: f64,
    pub plan: f64,
    pub refine: f64,
    pub remote_calls: u32,
}

impl Timings {
    /// Retrieval and grounding time.
    pub fn think(&self) -> f64 {
        self.retrieval + self.grounding
    }
}

/// Per-task inputs.
#[derive(Clone, Debug)]
pub struct TaskInput {
    pub instruction: String,
    pub retriever: RetrieverSpec,
    pub grounder: GrounderSpec,
    pub robot: RobotConfig,
    /// Plan as if every door were open.
    pub all_doors_open: bool,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub selected: Vec<String>,
    pub compressed: CompressedMap,
    pub grounding: GroundingResult,
    pub problem: Problem,
    pub plan: Plan,
    pub refined: Plan,
    pub cost: u64,
    /// Absent for the external engine.
    pub stats: Option<SearchStats>,
    pub timings: Timings,
}

/// Loaded, immutable inputs shared by every run.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub map: Arc<TopoMap>,
    open_map: TopoMap,
    pub index: TextualIndex,
    pub base: Domain,
    base_text: String,
    single: Domain,
    dual: Domain,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, ConfigError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| ConfigError::Io { path: p.into(), msg: e.to_string() });
        let map = load_map(read(&config.map)?.as_bytes()).map_err(|e| ConfigError::Invalid(format!("map: {e}")))?;
        let base_text = read(&config.domain)?;
        let base = parse_domain(&base_text).map_err(|e| ConfigError::Invalid(format!("domain: {e}")))?;
        let expand = |bimanual: bool| -> Result<Domain, ExpandError> {
            let o = ExpansionOptions {
                bimanual,
                doors: config.doors,
                costs: config.costs,
                names: config.names.clone(),
                aliases: config.aliases.clone(),
                ..Default::default()
            };
            Ok(expand_all(&base, &o)?.0)
        };
        let bad = |e: ExpandError| ConfigError::Invalid(format!("domain expansion: {e}"));
        let single = expand(false).map_err(bad)?;
        let dual = expand(true).map_err(bad)?;
        Ok(Pipeline {
            index: TextualIndex::from_map(&map),
            open_map: map.with_doors_open(),
            map: Arc::new(map),
            base,
            base_text,
            single,
            dual,
            config,
        })
    }

    /// Expanded domain for a robot with this many hands.
    pub fn domain(&self, hands: usize) -> &Domain {
        if hands >= 2 {
            &self.dual
        } else {
            &self.single
        }
    }

    pub fn arms(hands: usize) -> Arms {
        if hands >= 2 {
            Arms::Dual
        } else {
            Arms::Single
        }
    }

    /// Input built from the config's own retriever, grounder and robot.
    pub fn default_input(&self, instruction: &str) -> Result<TaskInput, ConfigError> {
        let missing = |w: &str| ConfigError::Invalid(format!("no {w} configured"));
        Ok(TaskInput {
            instruction: instruction.to_string(),
            retriever: self.config.retriever.clone().ok_or_else(|| missing("retriever"))?,
            grounder: self.config.grounder.clone().ok_or_else(|| missing("grounder"))?,
            robot: self.config.robot.clone(),
            all_doors_open: false,
        })
    }

    pub fn run(&self, input: &TaskInput) -> Result<PipelineRun, (StageError, Timings)> {
        let mut t = Timings::default();
        let r = self.run_inner(input, &mut t);
        r.map_err(|e| (e, t.clone()))
    }

    fn run_inner(&self, input: &TaskInput, t: &mut Timings) -> Result<PipelineRun, StageError> {
        use FailureCategory::*;
        let remote = |s: bool| u32::from(s);

        let clock = Instant::now();
        t.remote_calls += remote(matches!(input.retriever, RetrieverSpec::Remote(_)));
        let selected = retrieve_nodes(&input.instruction, &self.index, &input.retriever);
        t.retrieval = clock.elapsed().as_secs_f64();
        let selected = selected.map_err(|e| err(Stage::Retrieve, Retrieval, e))?;

        let clock = Instant::now();
        let map = if input.all_doors_open { &self.open_map } else { &*self.map };
        let opts = CompressOptions { keep_all_doors: self.config.keep_all_doors };
        let compressed = compress(map, &selected, &input.robot.start, opts);
        t.compress = clock.elapsed().as_secs_f64();
        let compressed = compressed.map_err(|e| err(Stage::Compress, Retrieval, e))?;

        let clock = Instant::now();
        t.remote_calls += remote(matches!(input.grounder, GrounderSpec::Remote(_)));
        let req = SceneRequest {
            instruction: &input.instruction,
            nodes: &selected,
            domain: &self.base,
            domain_text: &self.base_text,
            index: &self.index,
            images: selected
                .iter()
                .filter_map(|n| self.map.node(n).map(|x| (n.clone(), x.images.clone())))
                .filter(|(_, imgs)| !imgs.is_empty())
                .collect(),
        };
        let grounding = ground_scene(&req, &input.grounder);
        t.grounding = clock.elapsed().as_secs_f64();
        let grounding = grounding.map_err(|e| {
            let cat = match e {
                GroundingError::ValidationFailed(_) => PddlGrounding,
                _ => PerceptionGrounding,
            };
            err(Stage::Ground, cat, e)
        })?;

        let clock = Instant::now();
        let domain = self.domain(input.robot.hands.len());
        let problem = synthesize(domain, &compressed, &grounding, &input.robot, &self.config.names);
        t.synthesize = clock.elapsed().as_secs_f64();
        let problem = problem.map_err(|e| {
            let cat = match e {
                ForgeError::OrphanNode { .. } => Retrieval,
                _ => PddlGrounding,
            };
            err(Stage::Synthesize, cat, e)
        })?;

        let clock = Instant::now();
        let solved = self.solve(domain, &problem);
        t.plan = clock.elapsed().as_secs_f64();
        let (plan, cost, stats) = solved?;

        let clock = Instant::now();
        let refined = refine_plan(&plan, &compressed, &self.config.names);
        t.refine = clock.elapsed().as_secs_f64();
        let refined = refined.map_err(|e| err(Stage::Refine, Planning, e))?;

        Ok(PipelineRun { selected, compressed, grounding, problem, plan, refined, cost, stats, timings: t.clone() })
    }

    fn solve(&self, d: &Domain, p: &Problem) -> Result<(Plan, u64, Option<SearchStats>), StageError> {
        use FailureCategory::*;
        let plan_err = |e: PlanError| {
            let cat = match e {
                PlanError::Unsolvable | PlanError::UnknownGoalObject(_) => PddlGrounding,
                _ => Planning,
            };
            err(Stage::Solve, cat, e)
        };
        let task = ground_task_with(d, p, &GroundOptions { max_actions: self.config.max_ground_actions }).map_err(plan_err)?;
        match &self.config.engine {
            Engine::Internal => {
                let sol = solve_optimal(&task, &self.config.limits).map_err(plan_err)?;
                Ok((sol.plan, sol.cost, Some(sol.stats)))
            }
            Engine::External(cfg) => {
                let mut plan = solve_external(&print_domain(d), &print_problem(p), cfg).map_err(|e| {
                    let tool = !matches!(e, ExternalError::Unsolvable(_));
                    let cat = if tool { Planning } else { PddlGrounding };
                    StageError { tool_failure: tool, ..err(Stage::Solve, cat, e) }
                })?;
                let v = validate_plan(&task, &plan).map_err(plan_err)?;
                if !v.is_valid() {
                    return Err(err(Stage::Solve, Planning, format!("external plan is invalid: {:?}", v.violation)));
                }
                plan.reported_cost = Some(v.cost);
                Ok((plan, v.cost, None))
            }
        }
    }
}

/// Summary written next to the artifacts of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub instruction: String,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
    pub selected_nodes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstract_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub high_level_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchStats>,
}

impl RunReport {
    pub fn new(instruction: &str, r: &Result<PipelineRun, (StageError, Timings)>, p: &Pipeline) -> Self {
        match r {
            Ok(run) => RunReport {
                instruction: instruction.into(),
                success: true,
                error: None,
                selected_nodes: run.selected.clone(),
                cost: Some(run.cost),
                abstract_steps: Some(run.plan.steps.len()),
                refined_steps: Some(run.refined.steps.len()),
                high_level_steps: Some(high_level_steps(&run.refined, &p.config.names)),
                search: run.stats.clone(),
            },
            Err((e, _)) => RunReport {
                instruction: instruction.into(),
                success: false,
                error: Some(e.clone()),
                selected_nodes: vec![],
                cost: None,
                abstract_steps: None,
                refined_steps: None,
                high_level_steps: None,
                search: None,
            },
        }
    }
}

/// Writes compressed.json, domain.pddl, problem.pddl, plan.txt,
/// refined.txt, report.json and timings.json into `dir`.
pub fn write_artifacts(
    dir: &Path,
    p: &Pipeline,
    hands: usize,
    report: &RunReport,
    run: &Result<PipelineRun, (StageError, Timings)>,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), pretty_json(report))?;
    let timings = match run {
        Ok(r) => &r.timings,
        Err((_, t)) => t,
    };
    std::fs::write(dir.join("timings.json"), pretty_json(timings))?;
    std::fs::write(dir.join("domain.pddl"), print_domain(p.domain(hands)))?;
    if let Ok(r) = run {
        std::fs::write(dir.join("compressed.json"), r.compressed.to_json())?;
        std::fs::write(dir.join("grounding.json"), r.grounding.to_json())?;
        std::fs::write(dir.join("problem.pddl"), print_problem(&r.problem))?;
        std::fs::write(dir.join("plan.txt"), r.plan.to_string())?;
        std::fs::write(dir.join("refined.txt"), r.refined.to_string())?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn pretty_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}
