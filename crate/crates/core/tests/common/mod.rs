//! Shared test helpers: an outcome-tree oracle that knows nothing about
//! beliefs, and a generator of small random problems.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use probplan::domain::{Action, Consequence};
use probplan::execution::Step;
use probplan::{Context, Expression, Label, Literal, PropId, Propositions, State, StepId};

pub type Problem = probplan::Problem;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn widget() -> Problem {
    probplan::fixtures::widget()
}

pub fn widget_plan(text: &str) -> Vec<Step<f64>> {
    probplan::fixtures::plan(text, &widget()).expect("bundled plan parses")
}

pub fn final_plan() -> Vec<Step<f64>> {
    widget_plan(probplan::fixtures::WIDGET_FINAL_PLAN)
}

pub fn lit(problem: &Problem, text: &str) -> Literal {
    problem.propositions().parse_literal(text).expect("known literal")
}

pub fn expr(problem: &Problem, literals: &[&str]) -> Expression {
    Expression::new(literals.iter().map(|l| lit(problem, l))).expect("consistent expression")
}

/// One leaf of the outcome tree: final state, labels received per step and
/// the product of the probabilities along the path.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub state: Vec<bool>,
    pub received: BTreeMap<u32, String>,
    pub probability: f64,
}

fn state_bits(state: &State, width: usize) -> Vec<bool> {
    (0..width).map(|i| state.value(PropId::from(i as u8)).unwrap()).collect()
}

fn expression_holds(e: &Expression, bits: &[bool]) -> bool {
    e.literals().into_iter().all(|l| bits[l.prop.index()] == l.positive)
}

fn context_matches(context: &Context, received: &BTreeMap<u32, String>) -> bool {
    context
        .entries()
        .all(|(step, labels)| received.get(&step.0).is_some_and(|got| labels.iter().any(|l| l.as_str() == got)))
}

/// Walks every combination of initial state and consequence choices.
pub fn enumerate(problem: &Problem, steps: &[Step<f64>]) -> Vec<Leaf> {
    let width = problem.propositions().len();
    let mut leaves = Vec::new();
    for (state, mass) in problem.initial() {
        let leaf = Leaf { state: state_bits(state, width), received: BTreeMap::new(), probability: *mass };
        walk(steps, leaf, &mut leaves);
    }
    leaves
}

fn walk(steps: &[Step<f64>], leaf: Leaf, out: &mut Vec<Leaf>) {
    let Some((step, rest)) = steps.split_first() else {
        out.push(leaf);
        return;
    };
    if !context_matches(&step.context, &leaf.received) {
        walk(rest, leaf, out);
        return;
    }
    for c in step.action.consequences() {
        if !expression_holds(&c.trigger, &leaf.state) {
            continue;
        }
        let mut next = leaf.clone();
        for l in c.effects.literals() {
            next.state[l.prop.index()] = l.positive;
        }
        next.received.insert(step.index.0, c.label.as_str().to_string());
        next.probability *= c.probability;
        walk(rest, next, out);
    }
}

/// Probability that `e` holds after `steps`, by enumeration.
pub fn oracle_probability(problem: &Problem, steps: &[Step<f64>], e: &Expression) -> f64 {
    enumerate(problem, steps).iter().filter(|l| expression_holds(e, &l.state)).map(|l| l.probability).sum()
}

pub fn oracle_goal(problem: &Problem, steps: &[Step<f64>]) -> f64 {
    oracle_probability(problem, steps, problem.goal())
}

/// `P[e | every (step, label) in obs]`, by enumeration.
pub fn oracle_posterior(problem: &Problem, steps: &[Step<f64>], e: &Expression, obs: &[(u32, &str)]) -> f64 {
    let leaves = enumerate(problem, steps);
    let seen = |l: &Leaf| obs.iter().all(|(s, label)| l.received.get(s).map(String::as_str) == Some(*label));
    let evidence: f64 = leaves.iter().filter(|l| seen(l)).map(|l| l.probability).sum();
    let joint: f64 = leaves.iter().filter(|l| seen(l) && expression_holds(e, &l.state)).map(|l| l.probability).sum();
    joint / evidence
}

/// A random valid problem together with a random step sequence over it.
pub struct Scenario {
    pub problem: Problem,
    pub steps: Vec<Step<f64>>,
}

const LABELS: [&str; 3] = ["-", "a", "b"];

fn random_literals(rng: &mut impl Rng, width: usize, density: f64) -> Vec<Literal> {
    let mut out = Vec::new();
    for i in 0..width {
        if rng.gen_bool(density) {
            out.push(Literal::new(PropId::from(i as u8), rng.gen_bool(0.5)));
        }
    }
    out
}

fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
    let total: u32 = w.iter().sum();
    w.into_iter().map(|x| f64::from(x) / f64::from(total)).collect()
}

/// Trigger groups partition the state space on up to two propositions; each
/// group holds one to three consequences.
pub fn random_action(rng: &mut impl Rng, name: &str, width: usize) -> Action<f64> {
    let mut props: Vec<usize> = (0..width).collect();
    props.shuffle(rng);
    props.truncate(rng.gen_range(0..=width.min(2)));
    let informational = rng.gen_bool(0.5);
    let mut consequences = Vec::new();
    for cell in 0..(1usize << props.len()) {
        let trigger: Vec<Literal> = props
            .iter()
            .enumerate()
            .map(|(bit, &p)| Literal::new(PropId::from(p as u8), cell >> bit & 1 == 1))
            .collect();
        let trigger = Expression::new(trigger).unwrap();
        let n = rng.gen_range(1..=3);
        for (k, p) in random_weights(rng, n).into_iter().enumerate() {
            let effects = Expression::new(random_literals(rng, width, 0.35)).unwrap();
            let label = if informational { LABELS[rng.gen_range(0..LABELS.len())] } else { "-" };
            let c = Consequence::new(format!("c{cell}_{k}"), trigger.clone(), p, effects, Label::new(label)).unwrap();
            consequences.push(c);
        }
    }
    Action::new(name, consequences).unwrap()
}

pub fn random_problem(rng: &mut impl Rng, max_props: usize, max_actions: usize) -> Problem {
    let width = rng.gen_range(1..=max_props);
    let names: Vec<String> = (0..width).map(|i| format!("P{i}")).collect();
    let props = Propositions::new(names).unwrap();
    let actions: Vec<Action<f64>> =
        (0..rng.gen_range(1..=max_actions)).map(|i| random_action(rng, &format!("act{i}"), width)).collect();
    let mut states: Vec<u64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..(1u64 << width))).collect();
    states.sort_unstable();
    states.dedup();
    let initial = states
        .iter()
        .zip(random_weights(rng, states.len()))
        .map(|(&bits, w)| {
            let lits = (0..width).map(|i| Literal::new(PropId::from(i as u8), bits >> i & 1 == 1));
            (State::from_literals(width, lits).unwrap(), w)
        })
        .collect();
    let mut goal = random_literals(rng, width, 0.4);
    if goal.is_empty() {
        goal.push(Literal::new(PropId::from(0), rng.gen_bool(0.5)));
    }
    let goal = Expression::new(goal).unwrap();
    Problem::new(props, actions, initial, goal, 0.5).expect("generated problem is valid")
}

/// Up to `max_steps` steps; some are conditioned on labels of earlier steps.
pub fn random_steps(rng: &mut impl Rng, problem: &Problem, max_steps: usize) -> Vec<Step<f64>> {
    let mut steps: Vec<Step<f64>> = Vec::new();
    for i in 0..rng.gen_range(0..=max_steps) {
        let action = Arc::clone(problem.actions().choose(rng).unwrap());
        let mut context = Context::empty();
        if !steps.is_empty() && rng.gen_bool(0.4) {
            let earlier = steps.choose(rng).unwrap();
            let labels: Vec<Label> = earlier.action.labels().into_iter().collect();
            let allowed: Vec<Label> = labels.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            let allowed = if allowed.is_empty() { vec![labels[0].clone()] } else { allowed };
            context = context.allowing(earlier.index, allowed);
        }
        steps.push(Step::new(i as u32 + 1, action, context));
    }
    steps
}

pub fn scenario(seed: u64, max_props: usize, max_actions: usize, max_steps: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = random_problem(&mut rng, max_props, max_actions);
    let steps = random_steps(&mut rng, &problem, max_steps);
    Scenario { problem, steps }
}

pub fn step_id(n: u32) -> StepId {
    StepId(n)
}
