mod common;

use std::sync::Arc;

use common::{data, read};
use mobiplan_core::emulator::*;
use mobiplan_core::expand::NameTable;
use mobiplan_core::pddl::parse_condition;
use mobiplan_core::topo::{load_map, DoorState, TopoMap};

fn map() -> Arc<TopoMap> {
    Arc::new(load_map(read("map/building.json").as_bytes()).unwrap())
}

fn world(arms: Arms, doors: DoorSetting) -> WorldState {
    load_world(&read("world/building.json"), map(), doors, &arms.hands()).unwrap()
}

const OPTS: RunOptions = RunOptions { expand_moves: true, ground_names: true };

#[test]
fn golden_replays() {
    let m = load_replays(&data("replays/manifest.json")).unwrap();
    let map = map();
    let world_text = std::fs::read_to_string(&m.world).unwrap();
    let mut bad = Vec::new();
    for r in &m.replays {
        let w = load_world(&world_text, map.clone(), r.doors, &r.arms.hands()).unwrap();
        let table = OperatorTable::builtin(r.arms, &NameTable::default());
        let actions = parse_any(&std::fs::read_to_string(&r.plan).unwrap(), &table, &w.robot).unwrap();
        let goal = parse_condition(&r.goal).unwrap();
        let res = run(&w, &actions, &goal, OPTS);
        let diff = r.expect.check(&res);
        if !diff.is_empty() {
            bad.push(format!("{}: {diff:?} ({:?})", r.name, res.failure));
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn world_examples() {
    let w = world(Arms::Single, DoorSetting::AsMapped);
    let at = w.objects_at("office_602_table");
    assert!(at.contains(&"green_cup_1") && at.contains(&"pink_cup_1"));
    assert_eq!(w.door("office_602", "pose_21"), Some(DoorState::Closed));
    assert_eq!(w.robot_at, "pose_15");
    assert!(w.hands.values().all(Option::is_none));
    w.check_invariants().unwrap();

    assert_eq!(world(Arms::Dual, DoorSetting::AllOpen).closed_doors(), 0);
    assert_eq!(w.closed_doors(), 18);

    let bad = r#"{"start":"pose_15","nodes":{"fridge":[{"id":"apple_1","in":"fridge_9"}]}}"#;
    assert!(matches!(load_world(bad, map(), DoorSetting::AsMapped, &["hand".into()]), Err(WorldError::Schema(_))));
    let bad = r#"{"start":"pose_15","nodes":{"attic":[]}}"#;
    assert_eq!(load_world(bad, map(), DoorSetting::AsMapped, &["hand".into()]).unwrap_err(), WorldError::UnknownNode("attic".into()));
    let bad = r#"{"start":"nowhere","nodes":{}}"#;
    assert!(matches!(load_world(bad, map(), DoorSetting::AsMapped, &["hand".into()]), Err(WorldError::UnknownNode(_))));
}

#[test]
fn empty_plan_with_satisfied_goal() {
    let w = world(Arms::Single, DoorSetting::AsMapped);
    let goal = parse_condition("(on green_cup_1 office_602_desk)").unwrap();
    let r = run(&w, &[], &goal, OPTS);
    assert!(r.success);
    assert_eq!((r.executed_steps, r.high_level_steps, r.total_cost), (0, 0, 0.0));
    let r = run(&w, &[], &parse_condition("(is_on desk_lamp)").unwrap(), OPTS);
    assert_eq!(r.failure.unwrap().code, FailureCode::GoalUnmet);
}

#[test]
fn step_examples() {
    let w = world(Arms::Single, DoorSetting::AllOpen);
    let a = |k, t: &str| EmuAction::new(k, "robot", Some("hand"), t);
    let mv = |t: &str| EmuAction::new(ActionKind::Move, "robot", None, t);
    let hops = ["pose_14", "pose_3", "coffee_maker"];
    let mut s = w.clone();
    for h in hops {
        s = s.step(&mv(h)).unwrap();
    }
    // Nothing to pick here except fixed appliances.
    assert_eq!(s.step(&a(ActionKind::Pick, "coffee_machine")).unwrap_err().code, FailureCode::PreconditionViolated);

    // Coffee: carry a cup over, place it on the machine and switch it on.
    let goal = parse_condition("(and (filled_coffee green_cup_1) (on green_cup_1 coffee_machine))").unwrap();
    let plan = parse_freeform(
        "Move(office_602_table)\nPick(hand, green_cup)\nMove(coffee_maker)\nPlaceOn(hand, coffee_maker)\nTurnOn(hand, coffee_maker)",
        "robot",
    )
    .unwrap();
    let r = run(&w, &plan, &goal, OPTS);
    assert!(r.success, "{r:?}");

    // Closed door across the only route.
    let w = world(Arms::Single, DoorSetting::AsMapped);
    let s = ["pose_14", "pose_3", "pose_1", "pose_2", "pose_4"].iter().fold(w, |s, h| s.step(&mv(h)).unwrap());
    assert_eq!(s.step(&mv("office_604")).unwrap_err().code, FailureCode::DoorClosed);
    assert_eq!(s.step(&mv("office_613")).unwrap_err().code, FailureCode::Disconnected);
    let s = s.step(&EmuAction { door: Some(("pose_4".into(), "office_604".into())), ..a(ActionKind::OpenDoor, "door_604") }).unwrap();
    assert_eq!(s.door("pose_4", "office_604"), Some(DoorState::Open));
    s.step(&mv("office_604")).unwrap();
}
