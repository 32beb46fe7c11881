use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::emulator::{
    execute, load_world, parse_actions, parse_any, rpqg, success_rate, Arms, DoorSetting, EpisodeResult, MeanStd, OperatorTable,
    RunOptions, TaskSpec, WorldState,
};
use crate::forge::RobotConfig;
use crate::grounding::{GrounderSpec, RetrieverSpec};

use super::{FailureCategory, Pipeline, StageError, TaskInput, Timings};

/// Routed moves and per-node name matching, as for any submitted plan.
pub const EMULATION: RunOptions = RunOptions { expand_moves: true, ground_names: true };

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub repeats: usize,
    pub parallelism: usize,
    /// Named directories of `<task id>.txt` or `<task id>.plan` files.
    pub baselines: Vec<(String, PathBuf)>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { repeats: 1, parallelism: 1, baselines: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskRun {
    /// The plan ran in the emulator and reached the goal.
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
    /// World or plan-translation problems outside the pipeline stages.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setup_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_cost_met: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episode: Option<EpisodeResult>,
}

impl TaskRun {
    fn failed() -> Self {
        TaskRun {
            success: false,
            error: None,
            setup_error: None,
            cost: None,
            expected_cost_met: None,
            refined_steps: None,
            episode: None,
        }
    }

    pub fn high_level_steps(&self) -> Option<usize> {
        self.episode.as_ref().filter(|e| e.success).map(|e| e.high_level_steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskReport {
    pub id: String,
    pub arms: Arms,
    pub doors: DoorSetting,
    pub runs: Vec<TaskRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SettingReport {
    pub arms: Arms,
    pub doors: DoorSetting,
    pub tasks: usize,
    pub success_rate: MeanStd,
    pub display: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineTask {
    pub id: String,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episode: Option<EpisodeResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineReport {
    pub name: String,
    pub tasks: Vec<BaselineTask>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<MeanStd>,
    /// Tasks both methods solved in the first repeat.
    pub common_tasks: usize,
    /// Percent step reduction against this baseline, over repeats.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rpqg: Option<MeanStd>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rpqg_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub repeats: usize,
    pub tasks: Vec<TaskReport>,
    pub settings: Vec<SettingReport>,
    pub overall: MeanStd,
    pub overall_display: String,
    /// Pipeline failures by category, over all runs.
    pub failures: BTreeMap<FailureCategory, usize>,
    /// Emulator failures by code, over all runs.
    pub execution_failures: BTreeMap<String, usize>,
    /// Over successful runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_high_level_steps: Option<f64>,
    pub baselines: Vec<BaselineReport>,
}

/// Deterministic report plus the wall-clock side, kept apart.
#[derive(Clone, Debug)]
pub struct BenchOutput {
    pub report: BenchReport,
    /// Task id to per-repeat timings.
    pub timings: BTreeMap<String, Vec<Timings>>,
}

fn load_task_world(p: &Pipeline, t: &TaskSpec) -> Result<WorldState, String> {
    let text = std::fs::read_to_string(&t.world).map_err(|e| format!("{}: {e}", t.world.display()))?;
    load_world(&text, p.map.clone(), t.doors, &t.arms.hands()).map_err(|e| e.to_string())
}

fn run_once(p: &Pipeline, t: &TaskSpec) -> (TaskRun, Timings) {
    let mut out = TaskRun::failed();
    let world = match load_task_world(p, t) {
        Ok(w) => w,
        Err(e) => {
            out.setup_error = Some(e);
            return (out, Timings::default());
        }
    };
    let hands = t.arms.hands();
    let robot = RobotConfig {
        name: world.robot.clone(),
        hands: hands.clone(),
        start: t.start.clone().unwrap_or_else(|| world.robot_at.clone()),
        holding: Default::default(),
    };
    let mut world = world;
    world.robot_at = robot.start.clone();
    let input = TaskInput {
        instruction: t.instruction.clone(),
        retriever: RetrieverSpec::Fixture(t.retrieval.clone()),
        grounder: GrounderSpec::Fixture(t.grounding.clone()),
        robot,
        all_doors_open: t.doors == DoorSetting::AllOpen,
    };
    let run = match p.run(&input) {
        Ok(r) => r,
        Err((e, timings)) => {
            out.error = Some(e);
            return (out, timings);
        }
    };
    out.cost = Some(run.cost);
    out.expected_cost_met = t.expected_cost.map(|c| c == run.cost);
    out.refined_steps = Some(run.refined.steps.len());
    let table = OperatorTable::builtin(t.arms, &p.config.names);
    let goal = match t.goal_literals() {
        Ok(g) => g,
        Err(e) => {
            out.setup_error = Some(e.to_string());
            return (out, run.timings);
        }
    };
    match parse_actions(&run.refined, &table) {
        Ok(actions) => {
            let (ep, _) = execute(&world, &actions, &goal, EMULATION);
            out.success = ep.success;
            out.episode = Some(ep);
        }
        Err(e) => out.setup_error = Some(e.to_string()),
    }
    (out, run.timings)
}

fn run_baseline(p: &Pipeline, t: &TaskSpec, path: &std::path::Path) -> BaselineTask {
    let mut out = BaselineTask { id: t.id.clone(), success: false, error: None, episode: None };
    let result = (|| -> Result<EpisodeResult, String> {
        let world = load_task_world(p, t)?;
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let table = OperatorTable::builtin(t.arms, &p.config.names);
        let actions = parse_any(&text, &table, &world.robot).map_err(|e| e.to_string())?;
        let goal = t.goal_literals().map_err(|e| e.to_string())?;
        Ok(execute(&world, &actions, &goal, EMULATION).0)
    })();
    match result {
        Ok(ep) => {
            out.success = ep.success;
            out.episode = Some(ep);
        }
        Err(e) => out.error = Some(e),
    }
    out
}

fn baseline_plan(dir: &std::path::Path, id: &str) -> Option<PathBuf> {
    ["txt", "plan"].iter().map(|ext| dir.join(format!("{id}.{ext}"))).find(|p| p.is_file())
}

/// Runs every task `repeats` times, then any baselines. Reports are ordered
/// by task id whatever order the runs finish in.
pub fn run_bench(p: &Pipeline, suite: &[TaskSpec], o: &BenchOptions) -> Result<BenchOutput, String> {
    if suite.is_empty() {
        return Err("the suite has no tasks".into());
    }
    let repeats = o.repeats.max(1);
    let mut tasks: Vec<&TaskSpec> = suite.iter().collect();
    tasks.sort_by(|a, b| a.id.cmp(&b.id));
    let jobs: Vec<(usize, usize)> = (0..tasks.len()).flat_map(|i| (0..repeats).map(move |r| (i, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(o.parallelism.max(1)).build().map_err(|e| e.to_string())?;
    let results: Vec<(TaskRun, Timings)> = pool.install(|| jobs.par_iter().map(|&(i, _)| run_once(p, tasks[i])).collect());

    let mut reports = Vec::new();
    let mut timings = BTreeMap::new();
    let mut it = results.into_iter();
    for t in &tasks {
        let (runs, times): (Vec<TaskRun>, Vec<Timings>) = it.by_ref().take(repeats).unzip();
        timings.insert(t.id.clone(), times);
        reports.push(TaskReport { id: t.id.clone(), arms: t.arms, doors: t.doors, runs });
    }

    let sr = |sel: &dyn Fn(&TaskReport) -> bool| -> Option<MeanStd> {
        let per_repeat: Vec<Vec<bool>> =
            (0..repeats).map(|r| reports.iter().filter(|t| sel(t)).map(|t| t.runs[r].success).collect()).collect();
        success_rate(&per_repeat).ok()
    };
    let mut settings = Vec::new();
    for arms in [Arms::Single, Arms::Dual] {
        for doors in [DoorSetting::AllOpen, DoorSetting::AsMapped] {
            let sel = |t: &TaskReport| t.arms == arms && t.doors == doors;
            if let Some(rate) = sr(&sel) {
                let n = reports.iter().filter(|t| sel(t)).count();
                settings.push(SettingReport { arms, doors, tasks: n, success_rate: rate, display: rate.to_string() });
            }
        }
    }
    let overall = sr(&|_| true).expect("suite is non-empty");

    let mut failures = BTreeMap::new();
    let mut execution_failures = BTreeMap::new();
    let mut steps = Vec::new();
    for run in reports.iter().flat_map(|t| &t.runs) {
        if let Some(e) = &run.error {
            *failures.entry(e.category).or_insert(0) += 1;
        }
        if let Some(f) = run.episode.as_ref().and_then(|e| e.failure.as_ref()) {
            *execution_failures.entry(f.code.to_string()).or_insert(0) += 1;
        }
        steps.extend(run.high_level_steps().map(|s| s as f64));
    }
    let mean_high_level_steps = (!steps.is_empty()).then(|| steps.iter().sum::<f64>() / steps.len() as f64);

    let mut baselines = Vec::new();
    for (name, dir) in &o.baselines {
        let found: Vec<(usize, PathBuf)> =
            tasks.iter().enumerate().filter_map(|(i, t)| baseline_plan(dir, &t.id).map(|p| (i, p))).collect();
        let runs: Vec<(usize, BaselineTask)> =
            pool.install(|| found.par_iter().map(|(i, path)| (*i, run_baseline(p, tasks[*i], path))).collect());
        let success_rate = success_rate(&[runs.iter().map(|(_, b)| b.success).collect()]).ok();
        let pairs_for = |r: usize| -> Vec<(usize, usize)> {
            runs.iter()
                .filter(|(_, b)| b.success)
                .filter_map(|(i, b)| {
                    let ours = reports[*i].runs[r].high_level_steps()?;
                    Some((b.episode.as_ref()?.high_level_steps, ours))
                })
                .collect()
        };
        let per_repeat: Result<Vec<f64>, _> = (0..repeats).map(|r| rpqg(&pairs_for(r))).collect();
        let (rpqg_value, rpqg_error) = match per_repeat.map(|v| crate::emulator::mean_std(&v)) {
            Ok(Ok(m)) => (Some(m), None),
            Ok(Err(e)) | Err(e) => (None, Some(e.to_string())),
        };
        baselines.push(BaselineReport {
            name: name.clone(),
            common_tasks: pairs_for(0).len(),
            tasks: runs.into_iter().map(|(_, b)| b).collect(),
            success_rate,
            rpqg: rpqg_value,
            rpqg_error,
        });
    }

    let report = BenchReport {
        repeats,
        tasks: reports,
        settings,
        overall_display: overall.to_string(),
        overall,
        failures,
        execution_failures,
        mean_high_level_steps,
        baselines,
    };
    Ok(BenchOutput { report, timings })
}
