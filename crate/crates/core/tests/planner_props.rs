mod common;

use common::{brute_force, random_strips, Oracle};
use mobiplan_core::pddl::{parse_domain, parse_problem, Plan};
use mobiplan_core::planner::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn matches_explicit_state_oracle(seed in any::<u64>(), zero_costs in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, p) = random_strips(&mut rng, if zero_costs { 0 } else { 1 });
        let oracle = brute_force(&d, &p, 100_000);
        let t = ground_task(&d, &p).unwrap();
        let res = solve_optimal(&t, &SearchLimits::default());
        match oracle {
            Oracle::TooBig => {}
            Oracle::Unsolvable => prop_assert_eq!(res, Err(PlanError::Unsolvable)),
            Oracle::Solved(cost, steps) => {
                let sol = res.unwrap();
                prop_assert_eq!(sol.cost, cost);
                let v = validate_plan(&t, &sol.plan).unwrap();
                prop_assert!(v.is_valid());
                prop_assert_eq!(v.cost, cost);
                if !zero_costs {
                    prop_assert_eq!(&sol.plan.steps, &steps);
                }
                // Deterministic.
                prop_assert_eq!(solve_optimal(&t, &SearchLimits::default()).unwrap(), sol);
            }
        }
    }
}

fn tiny() -> (mobiplan_core::pddl::Domain, mobiplan_core::pddl::Problem) {
    let d = parse_domain(
        "(define (domain t) (:requirements :strips :action-costs)
           (:predicates (at ?x) (cup ?c) (filled ?c) (link ?a ?b))
           (:functions (total-cost) (w ?a ?b))
           (:action go :parameters (?a ?b) :precondition (and (at ?a) (link ?a ?b))
              :effect (and (at ?b) (not (at ?a)) (increase (total-cost) (w ?a ?b))))
           (:action fill :parameters (?c) :precondition (and (cup ?c) (at b)) :effect (and (filled ?c) (increase (total-cost) 1))))",
    )
    .unwrap();
    let p = parse_problem(
        "(define (problem q) (:domain t) (:objects a b c k)
           (:init (at a) (link a b) (link a c) (link c b) (= (w a b) 5) (= (w a c) 1) (= (w c b) 1) (cup k) (= (total-cost) 0))
           (:goal (filled k)) (:metric minimize (total-cost)))",
    )
    .unwrap();
    (d, p)
}

#[test]
fn cheaper_detour_and_static_pruning() {
    let (d, p) = tiny();
    let t = ground_task(&d, &p).unwrap();
    // (cup ?c) is static: only k gets a fill instance.
    assert_eq!(t.actions.iter().filter(|a| a.name.is("fill")).count(), 1);
    // go is grounded only over pairs with a weight and a reachable link.
    assert_eq!(t.actions.iter().filter(|a| a.name.is("go")).count(), 3);
    let sol = solve_optimal(&t, &SearchLimits::default()).unwrap();
    assert_eq!(sol.cost, 3);
    assert_eq!(sol.plan.to_string(), "(go a c)\n(go c b)\n(fill k)\n; cost = 3 (general cost)\n");
}

#[test]
fn trivial_goal_gives_empty_plan() {
    let (d, mut p) = tiny();
    p.goal = vec![mobiplan_core::pddl::Literal::pos(mobiplan_core::pddl::Atom::new("at", ["a"]))];
    let t = ground_task(&d, &p).unwrap();
    let sol = solve_optimal(&t, &SearchLimits::default()).unwrap();
    assert!(sol.plan.steps.is_empty());
    assert_eq!(sol.cost, 0);
    let v = validate_plan(&t, &Plan::default()).unwrap();
    assert!(v.is_valid() && v.cost == 0);
}

#[test]
fn unknown_action_and_violation() {
    let (d, p) = tiny();
    let t = ground_task(&d, &p).unwrap();
    let bad = mobiplan_core::pddl::parse_plan("(go b a)\n").unwrap();
    assert!(matches!(validate_plan(&t, &bad), Err(PlanError::UnknownAction { step: 0, .. })));
    let early = mobiplan_core::pddl::parse_plan("(go a c)\n(fill k)\n").unwrap();
    let v = validate_plan(&t, &early).unwrap();
    let viol = v.violation.unwrap();
    assert_eq!(viol.step, 1);
    assert_eq!(viol.unmet, ["(at b)"]);
}

#[test]
fn limits_are_reported() {
    let (d, p) = tiny();
    let t = ground_task(&d, &p).unwrap();
    let lim = SearchLimits { max_expansions: 1, ..Default::default() };
    assert_eq!(solve_optimal(&t, &lim), Err(PlanError::LimitExceeded(Limit::Expansions)));
    let err = ground_task_with(&d, &p, &GroundOptions { max_actions: 2 }).unwrap_err();
    assert!(matches!(err, PlanError::Explosion { .. }));
}
