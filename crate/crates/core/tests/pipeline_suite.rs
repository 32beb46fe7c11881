mod common;

use common::{data, read};
use mobiplan_core::emulator::load_suite;
use mobiplan_core::grounding::{GrounderSpec, RetrieverSpec};
use mobiplan_core::pddl::{parse_plan, parse_problem, PlanStep};
use mobiplan_core::pipeline::*;
use mobiplan_core::planner::{ground_task, solve_optimal, validate_plan, SearchLimits};

fn pipeline(cfg: &str) -> Pipeline {
    Pipeline::new(PipelineConfig::load(&data(cfg)).unwrap()).unwrap()
}

#[test]
fn t41_end_to_end() {
    let p = pipeline("config/t41.toml");
    let input = p.default_input("Prepare two cups of coffee and place them on the meeting table.").unwrap();
    let run = p.run(&input).unwrap();
    assert_eq!(run.cost, 73);
    let reference = parse_plan(&read("tasks/t41/refined.plan")).unwrap();
    assert_eq!(run.refined.steps, reference.steps);
    assert_eq!(run.refined.reported_cost, Some(73));

    // The emitted problem goes back through the planner unchanged.
    let text = mobiplan_core::pddl::print_problem(&run.problem);
    let again = parse_problem(&text).unwrap();
    let d = p.domain(1);
    let sol = solve_optimal(&ground_task(d, &again).unwrap(), &SearchLimits::default()).unwrap();
    assert_eq!(sol.plan, run.plan);
}

#[test]
fn failure_categories() {
    let p = pipeline("config/t41.toml");
    let mut input = p.default_input("Prepare two cups of coffee.").unwrap();
    input.grounder = GrounderSpec::Fixture(data("tasks/t41_missing_fact/grounding.json"));
    let (e, _) = p.run(&input).unwrap_err();
    assert_eq!((e.stage, e.category), (Stage::Solve, FailureCategory::PddlGrounding), "{e}");

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("retrieval.json");
    std::fs::write(&empty, r#"{"reasoning":"nothing fits","selected_nodes":[]}"#).unwrap();
    let mut input = p.default_input("Prepare two cups of coffee.").unwrap();
    input.retriever = RetrieverSpec::Fixture(empty);
    let (e, _) = p.run(&input).unwrap_err();
    assert_eq!((e.stage, e.category), (Stage::Retrieve, FailureCategory::Retrieval));

    let mut input = p.default_input("Prepare two cups of coffee.").unwrap();
    input.grounder = GrounderSpec::Fixture(dir.path().join("missing.json"));
    let (e, _) = p.run(&input).unwrap_err();
    assert_eq!(e.category, FailureCategory::PerceptionGrounding);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"objects":{"coffee_maker":["c1"]},"init":["(sparkly c1)"],"goal":"(is_on c1)"}"#).unwrap();
    let mut input = p.default_input("Prepare two cups of coffee.").unwrap();
    input.grounder = GrounderSpec::Fixture(bad);
    let (e, _) = p.run(&input).unwrap_err();
    assert_eq!((e.stage, e.category), (Stage::Ground, FailureCategory::PddlGrounding));
}

#[test]
fn suite_bench() {
    let p = pipeline("config/bench.toml");
    let suite = load_suite(&data("suite/tasks.json")).unwrap();
    assert_eq!(suite.len(), 12);
    let opts = BenchOptions {
        repeats: 4,
        parallelism: 2,
        baselines: vec![("sayplan".into(), data("baselines/sayplan")), ("llm".into(), data("baselines/llm"))],
    };
    let out = run_bench(&p, &suite, &opts).unwrap();
    let r = &out.report;
    let failed: Vec<_> = r.tasks.iter().filter(|t| !t.runs.iter().all(|x| x.success)).collect();
    assert!(failed.is_empty(), "{}", pretty_json(&failed));
    assert_eq!(r.overall_display, "100.00 ± 0.00");
    for t in &r.tasks {
        assert!(t.runs.iter().all(|x| x.expected_cost_met != Some(false)), "{}", t.id);
        assert!(t.runs.windows(2).all(|w| w[0] == w[1]), "{} is not deterministic", t.id);
    }
    assert_eq!(r.tasks.iter().find(|t| t.id == "t41-single").unwrap().runs[0].cost, Some(73));
    assert!(r.settings.iter().all(|s| s.success_rate.std == 0.0));

    let sayplan = &r.baselines[0];
    assert!(sayplan.tasks.iter().all(|t| t.success), "{}", pretty_json(sayplan));
    let gain = sayplan.rpqg.unwrap();
    assert!(gain.mean > 0.0 && gain.std == 0.0, "{gain}");
    let llm = &r.baselines[1];
    assert!(llm.rpqg.unwrap().mean > 0.0);

    // Same inputs, different degree of parallelism: same bytes.
    let serial = run_bench(&p, &suite, &BenchOptions { parallelism: 1, ..opts }).unwrap();
    assert_eq!(pretty_json(&serial.report), pretty_json(r));
}

#[test]
fn abstract_plans_validate() {
    let p = pipeline("config/bench.toml");
    for t in load_suite(&data("suite/tasks.json")).unwrap() {
        let hands = t.arms.hands();
        let input = TaskInput {
            instruction: t.instruction.clone(),
            retriever: RetrieverSpec::Fixture(t.retrieval.clone()),
            grounder: GrounderSpec::Fixture(t.grounding.clone()),
            robot: mobiplan_core::forge::RobotConfig {
                name: "robot".into(),
                hands: hands.clone(),
                start: "pose_15".into(),
                holding: Default::default(),
            },
            all_doors_open: t.doors == mobiplan_core::emulator::DoorSetting::AllOpen,
        };
        let run = p.run(&input).unwrap_or_else(|(e, _)| panic!("{}: {e}", t.id));
        let task = ground_task(p.domain(hands.len()), &run.problem).unwrap();
        let v = validate_plan(&task, &run.plan).unwrap();
        assert!(v.is_valid(), "{}", t.id);
        assert_eq!(v.cost, run.cost);
        let moves = |s: &&PlanStep| s.name.is("move_robot");
        assert_eq!(
            run.plan.steps.iter().filter(|s| !moves(s)).collect::<Vec<_>>(),
            run.refined.steps.iter().filter(|s| !moves(s)).collect::<Vec<_>>()
        );
    }
}
