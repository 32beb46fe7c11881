mod common;

use std::collections::{BTreeSet, HashSet};

use common::{data, read};
use mobiplan_core::emulator::*;
use mobiplan_core::forge::{synthesize, RobotConfig};
use mobiplan_core::grounding::RESERVED_PREDICATES;
use mobiplan_core::pddl::{Atom, Domain, Plan, PlanStep};
use mobiplan_core::pipeline::{Pipeline, PipelineConfig};
use mobiplan_core::planner::{ground_task, high_level_steps, refine_plan};
use mobiplan_core::topo::{compress, CompressOptions, DoorState};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pipeline() -> &'static Pipeline {
    static P: std::sync::OnceLock<Pipeline> = std::sync::OnceLock::new();
    P.get_or_init(|| Pipeline::new(PipelineConfig::load(&data("config/bench.toml")).unwrap()).unwrap())
}

fn world(arms: Arms, doors: DoorSetting) -> WorldState {
    load_world(&read("world/building.json"), pipeline().map.clone(), doors, &arms.hands()).unwrap()
}

fn arms_of(dual: bool) -> Arms {
    if dual {
        Arms::Dual
    } else {
        Arms::Single
    }
}

fn doors_of(open: bool) -> DoorSetting {
    if open {
        DoorSetting::AllOpen
    } else {
        DoorSetting::AsMapped
    }
}

/// A plausible action: usually something local to the robot.
fn random_action(w: &WorldState, rng: &mut ChaCha8Rng) -> EmuAction {
    let hands: Vec<&String> = w.hands.keys().collect();
    let hand = hands.choose(rng).map(|h| h.as_str());
    let kind = *ActionKind::ALL.choose(rng).unwrap();
    match kind {
        ActionKind::Move => {
            let m = w.map();
            let next = m.neighbors(m.index_of(&w.robot_at).unwrap());
            let to = next.choose(rng).map_or(w.robot_at.as_str(), |&(n, _)| m.name(n)).to_string();
            EmuAction::new(kind, &w.robot, None, &to)
        }
        ActionKind::OpenDoor => {
            let here: Vec<&(String, String)> =
                w.doors.keys().filter(|(a, b)| *a == w.robot_at || *b == w.robot_at).collect();
            match here.choose(rng) {
                Some((a, b)) => EmuAction { door: Some((a.clone(), b.clone())), ..EmuAction::new(kind, &w.robot, hand, "door") },
                None => EmuAction::new(kind, &w.robot, hand, "door_x_y"),
            }
        }
        _ => {
            let local = w.objects_at(&w.robot_at);
            let target = if !local.is_empty() && rng.gen_bool(0.9) {
                local.choose(rng).unwrap().to_string()
            } else {
                w.objects.keys().collect::<Vec<_>>().choose(rng).unwrap().to_string()
            };
            EmuAction::new(kind, &w.robot, hand, &target)
        }
    }
}

fn held_count(w: &WorldState) -> usize {
    w.objects.values().filter(|o| matches!(o.location, Location::Held(_) | Location::Under { .. })).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hands_and_doors(seed in any::<u64>(), dual in any::<bool>(), open in any::<bool>(), len in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = world(arms_of(dual), doors_of(open));
        for _ in 0..len {
            let a = random_action(&w, &mut rng);
            let Ok(next) = w.step(&a) else { continue };
            prop_assert!(next.check_invariants().is_ok(), "{a}: {:?}", next.check_invariants());
            let busy = next.hands.values().filter(|h| h.is_some()).count();
            prop_assert_eq!(busy, held_count(&next), "after {}", a);
            for (k, s) in &w.doors {
                if *s == DoorState::Open {
                    prop_assert_eq!(next.doors[k], DoorState::Open, "door {:?} closed again", k);
                }
            }
            prop_assert_eq!(w.doors.len(), next.doors.len());
            w = next;
        }
    }

    #[test]
    fn move_collapse(seed in any::<u64>()) {
        // Expanding abstract moves into hops leaves the high-level count alone.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = &pipeline().config.names;
        let nodes = ["office_602_table", "coffee_maker", "meeting_table", "pose_15"];
        let c = compress(&pipeline().map.with_doors_open(), &nodes[..3].iter().map(|s| s.to_string()).collect::<Vec<_>>(), "pose_15", CompressOptions::default()).unwrap();
        let mut at = "pose_15";
        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(0..12) {
            if rng.gen_bool(0.5) {
                let to = *nodes[..3].choose(&mut rng).unwrap();
                if to != at {
                    steps.push(PlanStep::new(names.move_robot.as_str(), ["robot", at, to]));
                    at = to;
                }
            } else {
                steps.push(PlanStep::new("turn_on_lamp", ["robot", "lamp"]));
            }
        }
        let plan = Plan { steps, reported_cost: None };
        let refined = refine_plan(&plan, &c, names).unwrap();
        prop_assert!(refined.steps.len() >= plan.steps.len());
        prop_assert_eq!(high_level_steps(&refined, names), high_level_steps(&plan, names));
    }
}

#[test]
fn pick_then_place_restores() {
    for arms in [Arms::Single, Arms::Dual] {
        let w = world(arms, DoorSetting::AllOpen);
        for (id, o) in &w.objects {
            if o.fixed {
                continue;
            }
            let (kind, support) = match &o.location {
                Location::On(s) => (ActionKind::PlaceOn, s),
                Location::In(c) => (ActionKind::PlaceIn, c),
                _ => continue,
            };
            // Stacked on something movable; not a place target.
            if !w.objects[support].fixed {
                continue;
            }
            let mut s = w.clone();
            s.robot_at = w.node_of(id).unwrap().to_string();
            let hand = w.hands.keys().last().unwrap().as_str();
            let picked = match s.step(&EmuAction::new(ActionKind::Pick, "robot", Some(hand), id)) {
                Ok(p) => p,
                // Closed containers and stacked items are allowed to refuse.
                Err(v) => {
                    assert!(matches!(v.code, FailureCode::ContainerClosed | FailureCode::UnderOthers), "{id}: {v:?}");
                    continue;
                }
            };
            assert_eq!(picked.held_by(hand), Some(id.as_str()));
            let back = picked.step(&EmuAction::new(kind, "robot", Some(hand), support)).unwrap();
            assert_eq!(back.objects, s.objects, "{id}");
            assert_eq!(back.hands, s.hands, "{id}");
        }
    }
}

fn shared_facts(w: &WorldState, ids: &[&str], d: &Domain) -> BTreeSet<String> {
    object_facts(w, ids, d).iter().map(ToString::to_string).collect()
}

/// Random walk over applicable ground actions of a problem read from the
/// world, replayed in the emulator. Returns a description of the first
/// disagreement.
fn walk(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = pipeline();
    let (dual, open) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
    let arms = arms_of(dual);
    let w = world(arms, doors_of(open));
    let mut populated: Vec<String> = w.objects.keys().filter_map(|id| w.node_of(id)).map(str::to_string).collect();
    populated.sort();
    populated.dedup();
    let k = rng.gen_range(1..=3);
    let mut nodes: Vec<String> = populated.choose_multiple(&mut rng, k).cloned().collect();
    nodes.sort();

    let grounding = world_grounding(&w, &nodes, &p.base);
    let map = if open { p.map.with_doors_open() } else { (*p.map).clone() };
    let c = compress(&map, &nodes, &w.robot_at, CompressOptions::default()).map_err(|e| e.to_string())?;
    let robot = RobotConfig { name: w.robot.clone(), hands: arms.hands(), start: w.robot_at.clone(), holding: Default::default() };
    let names = &p.config.names;
    let d = p.domain(robot.hands.len());
    let problem = synthesize(d, &c, &grounding, &robot, names).map_err(|e| e.to_string())?;
    let task = ground_task(d, &problem).map_err(|e| e.to_string())?;

    // The base domain cannot express stacking or fixed furniture, so
    // stacked items are left alone and fixed ones are never picked.
    let stacked: Vec<&str> = w.objects.values().filter(|o| o.flag("under_others")).map(|o| o.id.as_str()).collect();
    let table = OperatorTable::builtin(arms, names);
    let lifts_fixed = |a: &&mobiplan_core::planner::GroundAction| {
        let step = PlanStep { name: a.name.clone(), args: a.args.clone() };
        let e = &parse_actions(&Plan { steps: vec![step], reported_cost: None }, &table).unwrap()[0];
        e.kind == ActionKind::Pick && w.objects.get(&e.target).is_some_and(|o| o.fixed)
    };
    let mut state: HashSet<u32> = task.init.iter().copied().collect();
    let mut steps = Vec::new();
    for _ in 0..rng.gen_range(1..25) {
        let ok: Vec<_> = task
            .actions
            .iter()
            .filter(|a| !a.args.iter().any(|x| stacked.contains(&x.as_str())))
            .filter(|a| !lifts_fixed(a))
            .filter(|a| a.pre_pos.iter().all(|f| state.contains(f)) && !a.pre_neg.iter().any(|f| state.contains(f)))
            .collect();
        let Some(a) = ok.choose(&mut rng) else { break };
        for f in &a.del {
            state.remove(f);
        }
        state.extend(a.add.iter().copied());
        steps.push(PlanStep { name: a.name.clone(), args: a.args.clone() });
    }
    let plan = Plan { steps, reported_cost: None };
    let refined = refine_plan(&plan, &c, names).map_err(|e| e.to_string())?;
    let actions = parse_actions(&refined, &table).map_err(|e| e.to_string())?;
    let opts = RunOptions { expand_moves: false, ground_names: false };
    let (res, end) = execute(&w, &actions, &[], opts);
    if !res.success {
        return Err(format!("emulator rejected a valid walk: {:?}\nplan:\n{plan}", res.failure));
    }

    let ids: Vec<&str> = grounding.objects.values().flatten().map(String::as_str).collect();
    let pddl: BTreeSet<String> = state
        .iter()
        .map(|&f| &task.facts[f as usize])
        .filter(|a| p.base.predicate(a.pred.as_str()).is_some() && !RESERVED_PREDICATES.contains(&a.pred.as_str()))
        .filter(|a| a.args.iter().all(|x| ids.contains(&x.as_str())))
        .map(ToString::to_string)
        .collect();
    let emu = shared_facts(&end, &ids, &p.base);
    if pddl != emu {
        let only_pddl: Vec<_> = pddl.difference(&emu).collect();
        let only_emu: Vec<_> = emu.difference(&pddl).collect();
        return Err(format!("facts differ: planner only {only_pddl:?}, emulator only {only_emu:?}\nplan:\n{plan}"));
    }

    let mut pddl_held: BTreeSet<String> = BTreeSet::new();
    let mut robot_at = None;
    for &f in &state {
        let a = &task.facts[f as usize];
        if a.pred.is("holding") {
            pddl_held.insert(a.args.last().unwrap().key());
        } else if a.pred.is(&names.rob_at_node) {
            robot_at = Some(a.args[1].key());
        }
    }
    let emu_held: BTreeSet<String> = end.hands.values().flatten().cloned().collect();
    if pddl_held != emu_held {
        return Err(format!("held objects differ: {pddl_held:?} vs {emu_held:?}"));
    }
    if robot_at.as_deref() != Some(end.robot_at.as_str()) {
        return Err(format!("robot at {robot_at:?} vs {}", end.robot_at));
    }
    for e in &c.doors {
        // A door stays in `has_door`; opening it adds `connected`.
        let closed = !task.fact_id(&Atom::new(names.connected.as_str(), [e.a.as_str(), e.b.as_str()])).is_some_and(|f| state.contains(&f));
        if closed != (end.door(&e.a, &e.b) == Some(DoorState::Closed)) {
            return Err(format!("door {} -- {} disagrees: planner closed {closed}, emulator {:?}", e.a, e.b, end.door(&e.a, &e.b)));
        }
    }
    Ok(())
}

#[test]
fn emulator_agrees_with_planner() {
    let bad: Vec<String> = (0..1500u64).filter_map(|s| walk(s).err().map(|e| format!("seed {s}: {e}"))).collect();
    assert!(bad.is_empty(), "{} disagreements, first: {}", bad.len(), bad[0]);
}
