//! Plan refinements: link addition, promotion, demotion, confrontation and
//! branching.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use crate::domain::{Label, Literal};
use crate::execution::StepId;
use crate::problem::Problem;
use crate::scalar::Probability;

use super::plan::{CausalLink, Plan, Signature, StepRole, Subgoal, Threat};
use super::PlanError;

pub const DEFAULT_MAX_ACTION_COPIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineConfig {
    /// Most instances of one action a plan may contain.
    pub max_action_copies: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { max_action_copies: DEFAULT_MAX_ACTION_COPIES }
    }
}

/// Every legal single refinement of `plan`, without duplicates. An empty
/// result is a dead end.
pub fn refine<P: Probability>(plan: &Plan<P>, problem: &Problem<P>, config: &RefineConfig) -> Vec<Plan<P>> {
    refine_with_signatures(plan, problem, config).into_iter().map(|(_, p)| p).collect()
}

/// [`refine`], pairing each successor with its signature.
pub(crate) fn refine_with_signatures<P: Probability>(
    plan: &Plan<P>,
    problem: &Problem<P>,
    config: &RefineConfig,
) -> Vec<(Signature, Plan<P>)> {
    let mut out = Successors { seen: HashSet::new(), plans: Vec::new() };
    for subgoal in plan.find_subgoals() {
        add_links(plan, problem, config, subgoal, &mut out);
    }
    for threat in plan.find_threats() {
        order_around(plan, &threat, &mut out);
        confront(plan, &threat, &mut out);
        branch_on(plan, problem, config, &threat, &mut out);
    }
    out.plans
}

struct Successors<P> {
    seen: HashSet<Signature>,
    plans: Vec<(Signature, Plan<P>)>,
}

impl<P: Probability> Successors<P> {
    fn push(&mut self, plan: Plan<P>) {
        let signature = plan.signature();
        if self.seen.insert(signature.clone()) {
            self.plans.push((signature, plan));
        }
    }
}

fn describe<P: Probability>(plan: &Plan<P>, step: StepId) -> String {
    let name = plan.step(step).map_or("?", |s| s.action.name());
    format!("{name}#{step}")
}

fn literal_text<P: Probability>(problem: &Problem<P>, literal: Literal) -> String {
    problem.propositions().literal_text(literal)
}

fn add_links<P: Probability>(
    plan: &Plan<P>,
    problem: &Problem<P>,
    config: &RefineConfig,
    subgoal: Subgoal,
    out: &mut Successors<P>,
) {
    let Subgoal { literal, step: consumer } = subgoal;
    let consumer_ctx = plan.step(consumer).expect("subgoal step exists").context.clone();

    for (producer, step) in plan.steps() {
        if producer == consumer || step.role == StepRole::Goal || plan.precedes(consumer, producer) {
            continue;
        }
        if !step.context.compatible_with(&consumer_ctx) {
            continue;
        }
        for (c, consequence) in step.action.consequences().iter().enumerate() {
            if !consequence.effects.contains(literal) {
                continue;
            }
            let link = CausalLink { producer, consequence: c, literal, consumer };
            if plan.links().contains(&link) {
                continue;
            }
            let mut next = plan.clone();
            next.add_ordering(producer, consumer);
            next.add_link(link);
            next.note(format!(
                "link {}.{} -{}-> {}",
                describe(plan, producer),
                consequence.name,
                literal_text(problem, literal),
                describe(plan, consumer)
            ));
            out.push(next);
        }
    }

    for action in problem.actions() {
        if plan.copies_of(action.name()) >= config.max_action_copies {
            continue;
        }
        for (c, consequence) in action.consequences().iter().enumerate() {
            if !consequence.effects.contains(literal) {
                continue;
            }
            let mut next = plan.clone();
            let producer = next.add_step(action.clone());
            next.add_ordering(producer, consumer);
            next.add_link(CausalLink { producer, consequence: c, literal, consumer });
            next.note(format!(
                "add {}#{producer}, link .{} -{}-> {}",
                action.name(),
                consequence.name,
                literal_text(problem, literal),
                describe(plan, consumer)
            ));
            out.push(next);
        }
    }
}

/// Demotion (threat before the producer) and promotion (threat after the
/// consumer).
fn order_around<P: Probability>(plan: &Plan<P>, threat: &Threat, out: &mut Successors<P>) {
    let link = threat.link;
    if plan.step(link.producer).map(|s| s.role) == Some(StepRole::Action) {
        let mut next = plan.clone();
        if next.add_ordering(threat.step, link.producer) {
            next.note(format!("demote {} before {}", threat.step, link.producer));
            out.push(next);
        }
    }
    if plan.step(link.consumer).map(|s| s.role) == Some(StepRole::Action) {
        let mut next = plan.clone();
        if next.add_ordering(link.consumer, threat.step) {
            next.note(format!("promote {} after {}", threat.step, link.consumer));
            out.push(next);
        }
    }
}

/// Commits the threatening step to a consequence that leaves the link's
/// literal alone, making that consequence's trigger a subgoal.
fn confront<P: Probability>(plan: &Plan<P>, threat: &Threat, out: &mut Successors<P>) {
    let action = &plan.step(threat.step).expect("threat step exists").action;
    let threatening = &action.consequence(threat.consequence).trigger;
    for (c, consequence) in action.consequences().iter().enumerate() {
        if consequence.effects.contains(!threat.link.literal)
            || consequence.trigger == *threatening
            || consequence.trigger.is_empty()
            || plan.commitments().contains(&(threat.step, c))
        {
            continue;
        }
        let mut next = plan.clone();
        next.add_commitment(threat.step, c);
        next.note(format!("confront {} with .{}", threat.step, consequence.name));
        out.push(next);
    }
}

/// Every (L1, L2) with L1, L2 nonempty and disjoint.
pub fn label_partitions(labels: &BTreeSet<Label>) -> Vec<(BTreeSet<Label>, BTreeSet<Label>)> {
    let labels: Vec<&Label> = labels.iter().collect();
    let mut out = Vec::new();
    let combos = 3usize.pow(labels.len() as u32);
    for mut code in 0..combos {
        let (mut first, mut second) = (BTreeSet::new(), BTreeSet::new());
        for label in &labels {
            match code % 3 {
                1 => {
                    first.insert((*label).clone());
                }
                2 => {
                    second.insert((*label).clone());
                }
                _ => {}
            }
            code /= 3;
        }
        if !first.is_empty() && !second.is_empty() {
            out.push((first, second));
        }
    }
    out
}

fn branch_on<P: Probability>(
    plan: &Plan<P>,
    problem: &Problem<P>,
    config: &RefineConfig,
    threat: &Threat,
    out: &mut Successors<P>,
) {
    let pair = (threat.step, threat.link.consumer);
    if plan.step(pair.1).map(|s| s.role) != Some(StepRole::Action) {
        return;
    }
    for (id, step) in plan.action_steps() {
        if id == pair.0 || id == pair.1 || !step.action.is_informational() {
            continue;
        }
        for (first, second) in label_partitions(&step.action.labels()) {
            if let Ok(next) = branch(plan, pair, id, &first, &second) {
                out.push(next);
            }
        }
    }
    for action in problem.actions() {
        if !action.is_informational() || plan.copies_of(action.name()) >= config.max_action_copies {
            continue;
        }
        for (first, second) in label_partitions(&action.labels()) {
            let mut base = plan.clone();
            let id = base.add_step(Arc::clone(action));
            base.note(format!("add {}#{id} for branching", action.name()));
            if let Ok(next) = branch(&base, pair, id, &first, &second) {
                out.push(next);
            }
        }
    }
}

/// Makes `pair.0` execute only when `sensor` reports a label in `first` and
/// `pair.1` only when it reports one in `second`, orders the sensor before
/// both and makes its triggers subgoals.
pub fn branch<P: Probability>(
    plan: &Plan<P>,
    pair: (StepId, StepId),
    sensor: StepId,
    first: &BTreeSet<Label>,
    second: &BTreeSet<Label>,
) -> Result<Plan<P>, PlanError> {
    let bad = |msg: &str| Err(PlanError::Argument(msg.to_string()));
    if first.is_empty() || second.is_empty() {
        return bad("branch label sets must be nonempty");
    }
    if !first.is_disjoint(second) {
        return bad("branch label sets must be disjoint");
    }
    let Some(sensor_step) = plan.step(sensor) else {
        return bad("branching step is not in the plan");
    };
    if sensor_step.role != StepRole::Action || !sensor_step.action.is_informational() {
        return bad("branching step must be an informational action step");
    }
    let labels = sensor_step.action.labels();
    if !first.is_subset(&labels) || !second.is_subset(&labels) {
        return bad("branch labels must be produced by the branching step");
    }
    let mut next = plan.clone();
    for (target, allowed) in [(pair.0, first), (pair.1, second)] {
        if target == sensor {
            return bad("cannot branch a step on itself");
        }
        let Some(step) = plan.step(target).filter(|s| s.role == StepRole::Action) else {
            return bad("branched steps must be action steps");
        };
        if plan.precedes(target, sensor) {
            return bad("branched steps must be orderable after the branching step");
        }
        let Some(context) = step.context.conjoin(sensor, allowed) else {
            return bad("branch would make a step's context unsatisfiable");
        };
        if !next.add_ordering(sensor, target) {
            return bad("branched steps must be orderable after the branching step");
        }
        next.set_context(target, context);
    }
    next.mark_branch_point(sensor);
    let names = |s: &BTreeSet<Label>| s.iter().map(Label::as_str).collect::<Vec<_>>().join("|");
    next.note(format!("branch on {sensor}: {}@{} / {}@{}", pair.0, names(first), pair.1, names(second)));
    Ok(next)
}
