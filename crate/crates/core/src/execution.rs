//! Execution of step sequences over joint beliefs of world state and received
//! observations.
//!
//! A step whose context does not match the observations received so far is
//! skipped and changes nothing. An executable step splits each belief entry
//! over the consequences of its active trigger group, applying their effects
//! and recording their labels under the step's index.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{res, Action, DomainError, Expression, Label, State};
use crate::problem::Problem;
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecutionError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("step {0} appears more than once")]
    DuplicateStep(StepId),
    #[error("context of step {step} references step {referenced}, which does not precede it")]
    ForwardReference { step: StepId, referenced: StepId },
    #[error("observation has probability zero; cannot condition on it")]
    ConditioningOnNull,
    #[error("sample count must be at least 1")]
    NoSamples,
}

/// Unique index of a step within a plan or sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepId(pub u32);

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Observations a step requires before it may execute.
///
/// For each referenced step the context holds the set of labels it accepts;
/// with singleton sets this is a plain conjunction of labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    required: BTreeMap<StepId, BTreeSet<Label>>,
}

impl Context {
    pub fn empty() -> Self {
        Context::default()
    }

    pub fn is_empty(&self) -> bool {
        self.required.is_empty()
    }

    /// Context requiring `label` from `step`.
    pub fn single(step: StepId, label: impl Into<Label>) -> Self {
        Context::empty().allowing(step, [label.into()])
    }

    /// Adds `labels` to the accepted set for `step`.
    pub fn allowing(mut self, step: StepId, labels: impl IntoIterator<Item = Label>) -> Self {
        self.required.entry(step).or_default().extend(labels);
        self
    }

    /// Conjoins the requirement that `step` reports one of `labels`. `None`
    /// when the result can never match.
    pub fn conjoin(&self, step: StepId, labels: &BTreeSet<Label>) -> Option<Context> {
        let mut out = self.clone();
        let merged: BTreeSet<Label> = match self.required.get(&step) {
            Some(existing) => existing.intersection(labels).cloned().collect(),
            None => labels.clone(),
        };
        if merged.is_empty() {
            return None;
        }
        out.required.insert(step, merged);
        Some(out)
    }

    pub fn entries(&self) -> impl Iterator<Item = (StepId, &BTreeSet<Label>)> {
        self.required.iter().map(|(s, l)| (*s, l))
    }

    pub fn referenced_steps(&self) -> impl Iterator<Item = StepId> + '_ {
        self.required.keys().copied()
    }

    pub fn allowed(&self, step: StepId) -> Option<&BTreeSet<Label>> {
        self.required.get(&step)
    }

    /// `received ⊢ self`.
    pub fn matches(&self, received: &ExecutionContext) -> bool {
        self.required.iter().all(|(step, allowed)| received.label(*step).is_some_and(|l| allowed.contains(l)))
    }

    /// False iff some referenced step must report from disjoint label sets.
    pub fn compatible_with(&self, other: &Context) -> bool {
        self.required.iter().all(|(step, mine)| match other.required.get(step) {
            Some(theirs) => !mine.is_disjoint(theirs),
            None => true,
        })
    }

    /// Renames referenced steps; used when renumbering sequences.
    pub fn remap(&self, map: impl Fn(StepId) -> StepId) -> Context {
        Context { required: self.required.iter().map(|(s, l)| (map(*s), l.clone())).collect() }
    }
}

/// Observations actually received during execution, one per executed step.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExecutionContext {
    received: BTreeMap<StepId, Label>,
}

impl ExecutionContext {
    pub fn new() -> Self {
        ExecutionContext::default()
    }

    pub fn with(mut self, step: StepId, label: impl Into<Label>) -> Self {
        self.received.insert(step, label.into());
        self
    }

    pub fn record(&mut self, step: StepId, label: Label) {
        self.received.insert(step, label);
    }

    pub fn label(&self, step: StepId) -> Option<&Label> {
        self.received.get(&step)
    }

    pub fn entries(&self) -> impl Iterator<Item = (StepId, &Label)> {
        self.received.iter().map(|(s, l)| (*s, l))
    }

    pub fn executed(&self, step: StepId) -> bool {
        self.received.contains_key(&step)
    }

    /// Every observation in `other` was also received here.
    pub fn includes(&self, other: &ExecutionContext) -> bool {
        other.received.iter().all(|(s, l)| self.received.get(s) == Some(l))
    }

    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }
}

/// An indexed action instance with its context.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<P> {
    pub index: StepId,
    pub action: Arc<Action<P>>,
    pub context: Context,
}

impl<P> Step<P> {
    pub fn new(index: u32, action: Arc<Action<P>>, context: Context) -> Self {
        Step { index: StepId(index), action, context }
    }

    pub fn unconditional(index: u32, action: Arc<Action<P>>) -> Self {
        Step::new(index, action, Context::empty())
    }
}

/// Joint distribution over world states and received observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<P> {
    mass: BTreeMap<(State, ExecutionContext), P>,
}

impl<P: Probability> Belief<P> {
    pub fn from_states(states: impl IntoIterator<Item = (State, P)>) -> Self {
        let mut b = Belief { mass: BTreeMap::new() };
        for (s, m) in states {
            b.add(s, ExecutionContext::new(), m);
        }
        b
    }

    fn add(&mut self, state: State, ctx: ExecutionContext, mass: P) {
        use std::collections::btree_map::Entry;
        match self.mass.entry((state, ctx)) {
            Entry::Occupied(mut e) => {
                let v = e.get().clone() + mass;
                e.insert(v);
            }
            Entry::Vacant(e) => {
                e.insert(mass);
            }
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&State, &ExecutionContext, &P)> {
        self.mass.iter().map(|((s, c), m)| (s, c, m))
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> P {
        self.mass_where(|_, _| true)
    }

    pub fn mass_where(&self, mut pred: impl FnMut(&State, &ExecutionContext) -> bool) -> P {
        self.mass.iter().filter(|((s, c), _)| pred(s, c)).fold(P::zero(), |acc, (_, m)| acc + m.clone())
    }

    pub fn state_marginal(&self) -> BTreeMap<State, P> {
        let mut out: BTreeMap<State, P> = BTreeMap::new();
        for ((s, _), m) in &self.mass {
            let v = out.remove(s).unwrap_or_else(P::zero) + m.clone();
            out.insert(*s, v);
        }
        out
    }

    /// Probability that `expr` holds.
    pub fn probability(&self, expr: &Expression) -> Result<P, ExecutionError> {
        self.joint(expr, &ExecutionContext::new())
    }

    /// Probability that `expr` holds and every observation in `obs` was received.
    pub fn joint(&self, expr: &Expression, obs: &ExecutionContext) -> Result<P, ExecutionError> {
        let mut total = P::zero();
        for ((s, c), m) in &self.mass {
            if c.includes(obs) && expr.is_satisfied_by(s)? {
                total = total + m.clone();
            }
        }
        Ok(total)
    }

    pub fn observation_probability(&self, obs: &ExecutionContext) -> P {
        self.mass_where(|_, c| c.includes(obs))
    }

    /// `P[expr | obs]`.
    pub fn posterior(&self, expr: &Expression, obs: &ExecutionContext) -> Result<P, ExecutionError> {
        let evidence = self.observation_probability(obs);
        if evidence.is_zero() {
            return Err(ExecutionError::ConditioningOnNull);
        }
        Ok(self.joint(expr, obs)? / evidence)
    }

    /// Executes one step; entries whose received observations do not match
    /// the step's context pass through unchanged.
    pub fn apply(&self, step: &Step<P>) -> Result<Belief<P>, ExecutionError> {
        let mut out = Belief { mass: BTreeMap::new() };
        for ((state, ctx), mass) in &self.mass {
            if !step.context.matches(ctx) {
                out.add(*state, ctx.clone(), mass.clone());
                continue;
            }
            for i in step.action.active_group(state)? {
                let c = step.action.consequence(i);
                let next = res(&c.effects, state)?;
                let mut next_ctx = ctx.clone();
                next_ctx.record(step.index, c.label.clone());
                out.add(next, next_ctx, mass.clone() * c.probability.clone());
            }
        }
        Ok(out)
    }
}

/// Checks that step indices are unique and that contexts only reference
/// steps earlier in the sequence.
pub fn check_sequence<P>(steps: &[Step<P>]) -> Result<(), ExecutionError> {
    let mut seen = HashSet::new();
    for step in steps {
        for r in step.context.referenced_steps() {
            if !seen.contains(&r) {
                return Err(ExecutionError::ForwardReference { step: step.index, referenced: r });
            }
        }
        if !seen.insert(step.index) {
            return Err(ExecutionError::DuplicateStep(step.index));
        }
    }
    Ok(())
}

pub fn execute_sequence<P: Probability>(belief: &Belief<P>, steps: &[Step<P>]) -> Result<Belief<P>, ExecutionError> {
    check_sequence(steps)?;
    steps.iter().try_fold(belief.clone(), |b, step| b.apply(step))
}

/// Final belief after running `steps` from the problem's initial distribution.
pub fn final_belief<P: Probability>(problem: &Problem<P>, steps: &[Step<P>]) -> Result<Belief<P>, ExecutionError> {
    execute_sequence(&problem.initial_belief(), steps)
}

pub fn goal_probability<P: Probability>(problem: &Problem<P>, steps: &[Step<P>]) -> Result<P, ExecutionError> {
    probability_of(problem.goal(), problem, steps)
}

pub fn probability_of<P: Probability>(
    expr: &Expression,
    problem: &Problem<P>,
    steps: &[Step<P>],
) -> Result<P, ExecutionError> {
    final_belief(problem, steps)?.probability(expr)
}

pub fn posterior<P: Probability>(
    expr: &Expression,
    problem: &Problem<P>,
    steps: &[Step<P>],
    obs: &ExecutionContext,
) -> Result<P, ExecutionError> {
    final_belief(problem, steps)?.posterior(expr, obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_matching_is_inclusion() {
        let ctx = Context::single(StepId(1), "ok");
        assert!(Context::empty().matches(&ExecutionContext::new()));
        assert!(!ctx.matches(&ExecutionContext::new()));
        assert!(ctx.matches(&ExecutionContext::new().with(StepId(1), "ok").with(StepId(2), "-")));
        assert!(!ctx.matches(&ExecutionContext::new().with(StepId(1), "bad")));
    }

    #[test]
    fn label_sets_are_disjunctive() {
        let ctx = Context::empty().allowing(StepId(1), ["a".into(), "b".into()]);
        assert!(ctx.matches(&ExecutionContext::new().with(StepId(1), "b")));
        assert!(!ctx.matches(&ExecutionContext::new().with(StepId(1), "c")));
    }

    #[test]
    fn compatibility() {
        let ok = Context::single(StepId(1), "ok");
        let bad = Context::single(StepId(1), "bad");
        let other = Context::single(StepId(2), "bad");
        assert!(!ok.compatible_with(&bad));
        assert!(ok.compatible_with(&other));
        assert!(ok.compatible_with(&Context::empty()));
        let both = Context::empty().allowing(StepId(1), ["ok".into(), "bad".into()]);
        assert!(both.compatible_with(&bad));
    }

    #[test]
    fn conjoin_intersects() {
        let both = Context::empty().allowing(StepId(1), ["ok".into(), "bad".into()]);
        let only_ok: BTreeSet<Label> = ["ok".into()].into();
        let narrowed = both.conjoin(StepId(1), &only_ok).unwrap();
        assert_eq!(narrowed, Context::single(StepId(1), "ok"));
        let only_bad: BTreeSet<Label> = ["bad".into()].into();
        assert!(narrowed.conjoin(StepId(1), &only_bad).is_none());
    }

    #[test]
    fn execution_context_inclusion() {
        let full = ExecutionContext::new().with(StepId(1), "ok").with(StepId(2), "-");
        assert!(full.includes(&ExecutionContext::new()));
        assert!(full.includes(&ExecutionContext::new().with(StepId(1), "ok")));
        assert!(!full.includes(&ExecutionContext::new().with(StepId(1), "bad")));
        assert!(!full.includes(&ExecutionContext::new().with(StepId(3), "ok")));
    }
}
