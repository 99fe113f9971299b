mod common;

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use common::*;
use probplan::planner::{
    assess, branch, plan, refine, CausalLink, FailureReason, PlanError, RefineConfig, SearchConfig, Subgoal, Threat,
    GOAL, INITIAL,
};
use probplan::{goal_probability, Label, Plan, StepId};

fn labels(names: &[&str]) -> BTreeSet<Label> {
    names.iter().map(Label::new).collect()
}

/// Ship and reject, each linked to the initial state that makes its
/// processing consequence fire.
fn ship_and_reject(w: &Problem) -> (Plan, StepId, StepId) {
    let mut p = Plan::null(w);
    let ship = p.add_step(Arc::clone(w.action("ship").unwrap()));
    let reject = p.add_step(Arc::clone(w.action("reject").unwrap()));
    let not_pr = lit(w, "!PR");
    // Initial consequence 0 is the flawed state, 1 the sound one.
    p.add_link(CausalLink { producer: INITIAL, consequence: 1, literal: not_pr, consumer: ship });
    p.add_link(CausalLink { producer: INITIAL, consequence: 0, literal: not_pr, consumer: reject });
    (p, ship, reject)
}

/// The first `count` plans reached breadth-first from the null plan.
fn explored(w: &Problem, count: usize) -> Vec<Plan> {
    let config = RefineConfig::default();
    let mut queue = VecDeque::from([Plan::null(w)]);
    let mut out = Vec::new();
    while let Some(p) = queue.pop_front() {
        if out.len() >= count {
            break;
        }
        queue.extend(refine(&p, w, &config));
        out.push(p);
    }
    out
}

#[test]
fn null_plan_shape() {
    let w = widget();
    let p = Plan::null(&w);
    assert_eq!(p.steps().count(), 2);
    assert_eq!(p.orderings().len(), 1);
    assert!(p.links().is_empty());
    assert!(p.validate().is_ok());
    let a = assess(&p, &w).unwrap();
    assert!(a.sequence.is_empty());
    assert_eq!(a.probability, 0.0);
    let expected: BTreeSet<Subgoal> =
        ["PR", "PA", "NO"].iter().map(|l| Subgoal { literal: lit(&w, l), step: GOAL }).collect();
    assert_eq!(p.find_subgoals(), expected);
}

#[test]
fn linking_paint_adds_its_trigger_as_a_subgoal() {
    let w = widget();
    let mut p = Plan::null(&w);
    let paint = p.add_step(Arc::clone(w.action("paint").unwrap()));
    p.add_link(CausalLink { producer: paint, consequence: 0, literal: lit(&w, "PA"), consumer: GOAL });
    assert!(p.validate().is_ok());
    assert!(p.find_subgoals().contains(&Subgoal { literal: lit(&w, "!PR"), step: paint }));
}

#[test]
fn refining_the_null_plan_can_add_paint_for_pa() {
    let w = widget();
    let successors = refine(&Plan::null(&w), &w, &RefineConfig::default());
    let pa = lit(&w, "PA");
    assert!(successors.iter().any(|p| {
        p.links().iter().any(|l| {
            l.literal == pa
                && l.consumer == GOAL
                && p.step(l.producer).unwrap().action.name() == "paint"
                && l.consequence == 0
        })
    }));
}

#[test]
fn ship_and_reject_threaten_each_other() {
    let w = widget();
    let (p, ship, reject) = ship_and_reject(&w);
    let threats = p.find_threats();
    let links: Vec<CausalLink> = p.links().iter().copied().collect();
    let to = |consumer: StepId| *links.iter().find(|l| l.consumer == consumer).unwrap();
    let expected: BTreeSet<Threat> = [
        Threat { step: ship, consequence: 0, link: to(reject) },
        Threat { step: reject, consequence: 0, link: to(ship) },
    ]
    .into();
    assert_eq!(threats, expected);
}

#[test]
fn branching_on_inspect_removes_the_mutual_threats() {
    let w = widget();
    let (mut p, ship, reject) = ship_and_reject(&w);
    let inspect = p.add_step(Arc::clone(w.action("inspect").unwrap()));
    let branched = branch(&p, (ship, reject), inspect, &labels(&["ok"]), &labels(&["bad"])).unwrap();
    assert!(branched.validate().is_ok());
    assert!(branched.find_threats().is_empty());
    assert_eq!(branched.find_threats_ignoring_contexts().len(), 2);
    assert_eq!(branched.step(ship).unwrap().context.allowed(inspect), Some(&labels(&["ok"])));
    assert_eq!(branched.step(reject).unwrap().context.allowed(inspect), Some(&labels(&["bad"])));
    assert!(branched.precedes(inspect, ship) && branched.precedes(inspect, reject));
    let inspect_triggers = branched.find_subgoals();
    assert!(inspect_triggers.contains(&Subgoal { literal: lit(&w, "BL"), step: inspect }));
    assert!(inspect_triggers.contains(&Subgoal { literal: lit(&w, "!BL"), step: inspect }));
}

#[test]
fn refining_the_threatened_plan_offers_a_fresh_inspect_branch() {
    let w = widget();
    let (p, _, _) = ship_and_reject(&w);
    let successors = refine(&p, &w, &RefineConfig::default());
    assert!(successors.iter().any(|s| {
        s.branch_points().iter().any(|b| s.step(*b).unwrap().action.name() == "inspect") && s.find_threats().is_empty()
    }));
}

#[test]
fn paint_threatens_the_blemish_link_into_inspect() {
    let w = widget();
    let mut p = Plan::null(&w);
    let inspect = p.add_step(Arc::clone(w.action("inspect").unwrap()));
    let paint = p.add_step(Arc::clone(w.action("paint").unwrap()));
    p.add_link(CausalLink { producer: INITIAL, consequence: 0, literal: lit(&w, "BL"), consumer: inspect });
    let threats = p.find_threats();
    assert_eq!(threats.len(), 1);
    assert_eq!(threats.iter().next().unwrap().step, paint);
    let successors = refine(&p, &w, &RefineConfig::default());
    let resolved: Vec<&Plan> = successors.iter().filter(|s| s.precedes(inspect, paint)).collect();
    assert!(!resolved.is_empty());
    assert!(resolved.iter().any(|s| s.find_threats().is_empty()));
}

#[test]
fn branch_rejects_bad_arguments() {
    let w = widget();
    let (mut p, ship, reject) = ship_and_reject(&w);
    let inspect = p.add_step(Arc::clone(w.action("inspect").unwrap()));
    let paint = p.add_step(Arc::clone(w.action("paint").unwrap()));
    let err = |r: Result<Plan, PlanError>| matches!(r, Err(PlanError::Argument(_)));
    assert!(err(branch(&p, (ship, reject), inspect, &labels(&["ok"]), &labels(&["ok"]))));
    assert!(err(branch(&p, (ship, reject), inspect, &labels(&[]), &labels(&["bad"]))));
    assert!(err(branch(&p, (ship, reject), inspect, &labels(&["ok"]), &labels(&["maybe"]))));
    assert!(err(branch(&p, (ship, reject), paint, &labels(&["ok"]), &labels(&["bad"]))));
    assert!(err(branch(&p, (ship, inspect), inspect, &labels(&["ok"]), &labels(&["bad"]))));
    let mut ordered = p.clone();
    ordered.add_ordering(ship, inspect);
    assert!(err(branch(&ordered, (ship, reject), inspect, &labels(&["ok"]), &labels(&["bad"]))));
}

#[test]
fn refinements_are_well_formed_and_monotone() {
    let w = widget();
    for p in explored(&w, 400) {
        for s in refine(&p, &w, &RefineConfig::default()) {
            s.validate().unwrap();
            for (id, _) in p.steps() {
                assert!(s.step(id).is_some());
            }
            assert!(p.links().is_subset(s.links()));
            assert!(p.orderings().is_subset(s.orderings()));
            assert!(p.commitments().is_subset(s.commitments()));
        }
    }
}

#[test]
fn context_filter_only_removes_threats() {
    let w = widget();
    for p in explored(&w, 400) {
        assert!(p.find_threats().is_subset(&p.find_threats_ignoring_contexts()));
    }
}

#[test]
fn assessment_agrees_with_execution() {
    let w = widget();
    for p in explored(&w, 300) {
        let a = assess(&p, &w).unwrap();
        let direct = goal_probability(&w, &a.sequence).unwrap();
        assert!((a.probability - direct).abs() < 1e-12);
        assert_eq!(a.sequence.len(), p.action_step_count());
    }
}

#[test]
fn assessment_of_the_contingent_plan() {
    let w = widget();
    let (mut p, ship, reject) = ship_and_reject(&w);
    let inspect = p.add_step(Arc::clone(w.action("inspect").unwrap()));
    let mut p = branch(&p, (ship, reject), inspect, &labels(&["ok"]), &labels(&["bad"])).unwrap();
    let paint = p.add_step(Arc::clone(w.action("paint").unwrap()));
    let notify = p.add_step(Arc::clone(w.action("notify").unwrap()));
    assert!(p.add_ordering(inspect, paint));
    assert!(p.add_ordering(paint, ship) && p.add_ordering(paint, reject));
    assert!(p.add_ordering(ship, notify) && p.add_ordering(reject, notify));
    let a = assess(&p, &w).unwrap();
    assert!((a.probability - 0.9215).abs() < 1e-9);
}

#[test]
fn planner_solutions_are_sound() {
    let w = widget();
    for threshold in [0.6, 0.8] {
        let problem = w.with_threshold(threshold).unwrap();
        let solution = plan(&problem, &SearchConfig::default()).unwrap();
        let direct = goal_probability(&problem, &solution.steps).unwrap();
        assert!((direct - solution.probability).abs() < 1e-9);
        assert!(direct >= threshold);
        solution.plan.validate().unwrap();
    }
    let low = plan(&w.with_threshold(0.6).unwrap(), &SearchConfig::default()).unwrap();
    assert!(low.probability >= 0.665 - 1e-9);
}

#[test]
fn certainty_is_out_of_reach_on_a_small_budget() {
    let w = widget().with_threshold(1.0).unwrap();
    let failure = plan(&w, &SearchConfig { max_refinements: 200, ..SearchConfig::default() }).unwrap_err();
    assert_eq!(failure.reason, FailureReason::BudgetExhausted);
    let (steps, best) = failure.best.unwrap();
    assert!(best < 1.0);
    assert!((goal_probability(&w, &steps).unwrap() - best).abs() < 1e-12);
}

#[test]
fn strict_widget_needs_the_contingent_plan() {
    let w: Problem = probplan::fixtures::widget_strict();
    let config = SearchConfig { max_action_copies: 1, ..SearchConfig::default() };
    let solution = plan(&w, &config).unwrap();
    assert!((solution.probability - 0.9215).abs() < 1e-9);
    let names: Vec<&str> = solution.steps.iter().map(|s| s.action.name()).collect();
    assert_eq!(names.len(), 5);
    assert_eq!(names[0], "inspect");
    let ship = solution.steps.iter().find(|s| s.action.name() == "ship").unwrap();
    let reject = solution.steps.iter().find(|s| s.action.name() == "reject").unwrap();
    assert!(!ship.context.compatible_with(&reject.context));
}
