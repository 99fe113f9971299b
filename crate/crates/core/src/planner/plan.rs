use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::domain::{Action, Consequence, Expression, Label, Literal};
use crate::execution::{Context, Step, StepId};
use crate::problem::Problem;
use crate::scalar::Probability;

use super::PlanError;

pub const INITIAL: StepId = StepId(0);
pub const GOAL: StepId = StepId(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepRole {
    Initial,
    Goal,
    Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep<P> {
    pub action: Arc<Action<P>>,
    pub context: Context,
    pub role: StepRole,
}

/// A commitment that consequence `consequence` of `producer` makes `literal`
/// true for `consumer` and that nothing undoes it in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CausalLink {
    pub producer: StepId,
    pub consequence: usize,
    pub literal: Literal,
    pub consumer: StepId,
}

/// Raising the probability of `literal` at `step` might raise the plan's
/// success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subgoal {
    pub literal: Literal,
    pub step: StepId,
}

/// Consequence `consequence` of `step` can undo `link`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threat {
    pub step: StepId,
    pub consequence: usize,
    pub link: CausalLink,
}

/// A partially ordered, partially linked plan: the planner's search node.
///
/// Orderings are kept transitively closed, so `precedes` is a set lookup.
#[derive(Debug, Clone)]
pub struct Plan<P> {
    steps: BTreeMap<StepId, PlanStep<P>>,
    order: BTreeSet<(StepId, StepId)>,
    links: BTreeSet<CausalLink>,
    commitments: BTreeSet<(StepId, usize)>,
    branch_points: BTreeSet<StepId>,
    next_index: u32,
    provenance: Vec<String>,
}

/// Step positions paired with the labels each one allows.
type CanonicalContext = Vec<(u32, Vec<Label>)>;

/// Canonical form of a plan up to renaming of its steps; see [`Plan::signature`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    steps: Vec<(StepRole, String, CanonicalContext)>,
    order: Vec<(u32, u32)>,
    links: Vec<(u32, usize, Literal, u32)>,
    commitments: Vec<(u32, usize)>,
    branch_points: Vec<u32>,
}

/// Pseudo-action whose consequences are the initial states.
pub fn initial_action<P: Probability>(problem: &Problem<P>) -> Action<P> {
    let consequences = problem
        .initial()
        .iter()
        .enumerate()
        .map(|(i, (state, mass))| Consequence {
            name: format!("s{}", i + 1),
            trigger: Expression::empty(),
            probability: mass.clone(),
            effects: state.to_expression(),
            label: Label::silent(),
        })
        .collect();
    Action::new("initial", consequences).expect("problems have initial states")
}

/// Pseudo-action with a single consequence triggered by the goal.
pub fn goal_action<P: Probability>(problem: &Problem<P>) -> Action<P> {
    let c = Consequence {
        name: "goal".into(),
        trigger: problem.goal().clone(),
        probability: P::one(),
        effects: Expression::empty(),
        label: Label::silent(),
    };
    Action::new("goal", vec![c]).expect("one consequence")
}

impl<P: Probability> Plan<P> {
    /// The plan holding only the initial and goal steps.
    pub fn null(problem: &Problem<P>) -> Self {
        let mut steps = BTreeMap::new();
        steps.insert(
            INITIAL,
            PlanStep { action: Arc::new(initial_action(problem)), context: Context::empty(), role: StepRole::Initial },
        );
        steps.insert(
            GOAL,
            PlanStep { action: Arc::new(goal_action(problem)), context: Context::empty(), role: StepRole::Goal },
        );
        Plan {
            steps,
            order: [(INITIAL, GOAL)].into(),
            links: BTreeSet::new(),
            commitments: BTreeSet::new(),
            branch_points: BTreeSet::new(),
            next_index: 2,
            provenance: Vec::new(),
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = (StepId, &PlanStep<P>)> {
        self.steps.iter().map(|(id, s)| (*id, s))
    }

    pub fn step(&self, id: StepId) -> Option<&PlanStep<P>> {
        self.steps.get(&id)
    }

    /// Steps other than initial and goal.
    pub fn action_steps(&self) -> impl Iterator<Item = (StepId, &PlanStep<P>)> {
        self.steps().filter(|(_, s)| s.role == StepRole::Action)
    }

    pub fn action_step_count(&self) -> usize {
        self.steps.len() - 2
    }

    pub fn orderings(&self) -> &BTreeSet<(StepId, StepId)> {
        &self.order
    }

    pub fn links(&self) -> &BTreeSet<CausalLink> {
        &self.links
    }

    pub fn commitments(&self) -> &BTreeSet<(StepId, usize)> {
        &self.commitments
    }

    pub fn branch_points(&self) -> &BTreeSet<StepId> {
        &self.branch_points
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn precedes(&self, a: StepId, b: StepId) -> bool {
        self.order.contains(&(a, b))
    }

    /// Instances of `action` already in the plan.
    pub fn copies_of(&self, action: &str) -> usize {
        self.action_steps().filter(|(_, s)| s.action.name() == action).count()
    }

    /// The step as an executable sequence element.
    pub fn as_step(&self, id: StepId) -> Step<P> {
        let s = &self.steps[&id];
        Step { index: id, action: s.action.clone(), context: s.context.clone() }
    }

    pub(crate) fn note(&mut self, entry: String) {
        self.provenance.push(entry);
    }

    /// Adds a fresh instance of `action` between initial and goal.
    pub fn add_step(&mut self, action: Arc<Action<P>>) -> StepId {
        let id = StepId(self.next_index);
        self.next_index += 1;
        self.steps.insert(id, PlanStep { action, context: Context::empty(), role: StepRole::Action });
        self.order.insert((INITIAL, id));
        self.order.insert((id, GOAL));
        id
    }

    /// Adds `before < after` and closes transitively. Returns false (leaving
    /// the plan unchanged) when that would create a cycle.
    pub fn add_ordering(&mut self, before: StepId, after: StepId) -> bool {
        if before == after || self.precedes(after, before) {
            return false;
        }
        if self.precedes(before, after) {
            return true;
        }
        let mut lower: Vec<StepId> = self.order.iter().filter(|(_, b)| *b == before).map(|(a, _)| *a).collect();
        lower.push(before);
        let mut upper: Vec<StepId> = self.order.iter().filter(|(a, _)| *a == after).map(|(_, b)| *b).collect();
        upper.push(after);
        for &x in &lower {
            for &y in &upper {
                self.order.insert((x, y));
            }
        }
        true
    }

    pub fn add_link(&mut self, link: CausalLink) -> bool {
        self.links.insert(link)
    }

    pub fn add_commitment(&mut self, step: StepId, consequence: usize) -> bool {
        self.commitments.insert((step, consequence))
    }

    pub(crate) fn set_context(&mut self, step: StepId, context: Context) {
        self.steps.get_mut(&step).expect("step exists").context = context;
    }

    pub(crate) fn mark_branch_point(&mut self, step: StepId) {
        self.branch_points.insert(step);
    }

    fn trigger_subgoals(&self, step: StepId, consequence: usize, out: &mut BTreeSet<Subgoal>) {
        let trigger = &self.steps[&step].action.consequence(consequence).trigger;
        out.extend(trigger.literals().into_iter().map(|literal| Subgoal { literal, step }));
    }

    /// Goal literals, the triggers of every linked producer consequence and
    /// committed consequence, and all triggers of branch points.
    pub fn find_subgoals(&self) -> BTreeSet<Subgoal> {
        let mut out = BTreeSet::new();
        self.trigger_subgoals(GOAL, 0, &mut out);
        for link in &self.links {
            self.trigger_subgoals(link.producer, link.consequence, &mut out);
        }
        for &(step, c) in &self.commitments {
            self.trigger_subgoals(step, c, &mut out);
        }
        for &step in &self.branch_points {
            for c in 0..self.steps[&step].action.consequences().len() {
                self.trigger_subgoals(step, c, &mut out);
            }
        }
        out
    }

    /// Threats whose step can fall between producer and consumer and whose
    /// context is compatible with both link endpoints.
    pub fn find_threats(&self) -> BTreeSet<Threat> {
        self.threats(true)
    }

    /// Threats ignoring step contexts.
    pub fn find_threats_ignoring_contexts(&self) -> BTreeSet<Threat> {
        self.threats(false)
    }

    fn threats(&self, respect_contexts: bool) -> BTreeSet<Threat> {
        let mut out = BTreeSet::new();
        for link in &self.links {
            let producer_ctx = &self.steps[&link.producer].context;
            let consumer_ctx = &self.steps[&link.consumer].context;
            for (id, step) in self.action_steps() {
                if id == link.producer || id == link.consumer {
                    continue;
                }
                if self.precedes(id, link.producer) || self.precedes(link.consumer, id) {
                    continue;
                }
                if respect_contexts
                    && !(step.context.compatible_with(producer_ctx) && step.context.compatible_with(consumer_ctx))
                {
                    continue;
                }
                for (c, consequence) in step.action.consequences().iter().enumerate() {
                    if consequence.effects.contains(!link.literal) {
                        out.insert(Threat { step: id, consequence: c, link: *link });
                    }
                }
            }
        }
        out
    }

    /// Checks the structural invariants every refinement must preserve.
    pub fn validate(&self) -> Result<(), PlanError> {
        let defect = |msg: String| Err(PlanError::Malformed(msg));
        match (self.steps.get(&INITIAL), self.steps.get(&GOAL)) {
            (Some(i), Some(g)) if i.role == StepRole::Initial && g.role == StepRole::Goal => {}
            _ => return defect("missing initial or goal step".into()),
        }
        for &(a, b) in &self.order {
            if a == b || self.precedes(b, a) {
                return defect(format!("ordering cycle through {a} and {b}"));
            }
            if !self.steps.contains_key(&a) || !self.steps.contains_key(&b) {
                return defect(format!("ordering {a} < {b} names a missing step"));
            }
            for &(c, d) in self.order.range((b, StepId(0))..) {
                if c != b {
                    break;
                }
                if !self.precedes(a, d) {
                    return defect(format!("orderings not transitively closed at {a} < {b} < {d}"));
                }
            }
        }
        for (id, step) in self.steps() {
            if step.role == StepRole::Action && !(self.precedes(INITIAL, id) && self.precedes(id, GOAL)) {
                return defect(format!("step {id} is not between initial and goal"));
            }
            if step.role != StepRole::Action && !step.context.is_empty() {
                return defect(format!("step {id} is initial or goal but has a context"));
            }
            for (r, labels) in step.context.entries() {
                let Some(referenced) = self.steps.get(&r) else {
                    return defect(format!("context of {id} references missing step {r}"));
                };
                if !self.precedes(r, id) {
                    return defect(format!("context of {id} references {r}, which is not ordered before it"));
                }
                let known = referenced.action.labels();
                if labels.is_empty() || !labels.is_subset(&known) {
                    return defect(format!("context of {id} requires labels {r} does not produce"));
                }
            }
        }
        for link in &self.links {
            let (Some(producer), Some(consumer)) = (self.steps.get(&link.producer), self.steps.get(&link.consumer))
            else {
                return defect(format!("link {link:?} names a missing step"));
            };
            if !self.precedes(link.producer, link.consumer) {
                return defect(format!("link producer {} is not before consumer {}", link.producer, link.consumer));
            }
            match producer.action.consequences().get(link.consequence) {
                Some(c) if c.effects.contains(link.literal) => {}
                _ => return defect(format!("link {link:?} producer does not make its literal true")),
            }
            if !consumer.action.consequences().iter().any(|c| c.trigger.contains(link.literal)) {
                return defect(format!("link {link:?} literal is not in any trigger of the consumer"));
            }
        }
        for &(step, c) in &self.commitments {
            if self.steps.get(&step).is_none_or(|s| c >= s.action.consequences().len()) {
                return defect(format!("commitment ({step}, {c}) is dangling"));
            }
        }
        for &step in &self.branch_points {
            if self.steps.get(&step).is_none_or(|s| !s.action.is_informational()) {
                return defect(format!("branch point {step} is not an informational step"));
            }
        }
        Ok(())
    }

    /// Identifies everything assessment depends on (steps, contexts and
    /// orderings, under the plan's own indices); links are irrelevant.
    pub(crate) fn execution_key(&self) -> String {
        let mut out = String::new();
        for (id, s) in self.steps() {
            let _ = write!(out, "{id}:{}:{:?};", s.action.name(), s.context);
        }
        let _ = write!(out, "|{:?}", self.order);
        out
    }

    /// A relabeling-invariant description of the plan. Equal signatures mean
    /// isomorphic plans; isomorphic plans usually, but not always, share one.
    pub fn signature(&self) -> Signature {
        let canonical = self.canonical_positions();
        let pos = |id: StepId| canonical[&id] as u32;
        let mut steps: Vec<(u32, StepRole, String, CanonicalContext)> = self
            .steps()
            .map(|(id, s)| {
                let mut ctx: CanonicalContext =
                    s.context.entries().map(|(r, labels)| (pos(r), labels.iter().cloned().collect())).collect();
                ctx.sort_unstable();
                (pos(id), s.role, s.action.name().to_string(), ctx)
            })
            .collect();
        steps.sort_unstable_by_key(|s| s.0);
        let mut order: Vec<(u32, u32)> = self.order.iter().map(|(a, b)| (pos(*a), pos(*b))).collect();
        order.sort_unstable();
        let mut links: Vec<(u32, usize, Literal, u32)> =
            self.links.iter().map(|l| (pos(l.producer), l.consequence, l.literal, pos(l.consumer))).collect();
        links.sort_unstable();
        let mut commitments: Vec<(u32, usize)> = self.commitments.iter().map(|(s, c)| (pos(*s), *c)).collect();
        commitments.sort_unstable();
        let mut branch_points: Vec<u32> = self.branch_points.iter().map(|s| pos(*s)).collect();
        branch_points.sort_unstable();
        Signature {
            steps: steps.into_iter().map(|(_, role, name, ctx)| (role, name, ctx)).collect(),
            order,
            links,
            commitments,
            branch_points,
        }
    }

    /// Orders steps by a few rounds of neighbourhood colour refinement,
    /// breaking remaining ties by index.
    fn canonical_positions(&self) -> BTreeMap<StepId, usize> {
        let ids: Vec<StepId> = self.steps.keys().copied().collect();
        let at = |id: StepId| ids.binary_search(&id).expect("plan references its own steps");
        // Per step: (kind, neighbour, extra) triples whose neighbour colour is
        // looked up each round.
        let mut edges: Vec<Vec<(u64, usize, u64)>> = vec![Vec::new(); ids.len()];
        for &(a, b) in &self.order {
            edges[at(a)].push((0, at(b), 0));
            edges[at(b)].push((1, at(a), 0));
        }
        for l in &self.links {
            let extra = mix(l.consequence as u64, (l.literal.prop.index() as u64) << 1 | u64::from(l.literal.positive));
            edges[at(l.producer)].push((2, at(l.consumer), extra));
            edges[at(l.consumer)].push((3, at(l.producer), extra));
        }
        let mut colour: Vec<u64> = Vec::with_capacity(ids.len());
        for (i, (id, step)) in self.steps().enumerate() {
            for (r, labels) in step.context.entries() {
                let extra = labels.iter().fold(labels.len() as u64, |h, l| mix(h, hash_str(l.as_str())));
                edges[i].push((4, at(r), extra));
            }
            let mut own = mix(step.role as u64, hash_str(step.action.name()));
            own = mix(own, u64::from(self.branch_points.contains(&id)));
            for &(_, c) in self.commitments.range((id, 0)..=(id, usize::MAX)) {
                own = mix(own, 5 + c as u64);
            }
            colour.push(own);
        }
        let mut features: Vec<u64> = Vec::new();
        for _ in 0..3 {
            let next: Vec<u64> = edges
                .iter()
                .enumerate()
                .map(|(i, adjacent)| {
                    features.clear();
                    features.extend(adjacent.iter().map(|&(kind, j, extra)| mix(mix(kind, colour[j]), extra)));
                    features.sort_unstable();
                    features.iter().fold(colour[i], |h, &f| mix(h, f))
                })
                .collect();
            colour = next;
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by_key(|&i| (colour[i], ids[i]));
        order.into_iter().enumerate().map(|(p, i)| (ids[i], p)).collect()
    }
}

fn mix(h: u64, v: u64) -> u64 {
    let mut z = (h ^ v.rotate_left(29)).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3))
}
