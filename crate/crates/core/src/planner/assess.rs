//! Plan assessment by enumerating the total orders consistent with a plan.
//!
//! The enumeration is a depth-first walk that shares belief prefixes: the
//! belief after a prefix is computed once and reused by every linearization
//! extending it.

use crate::execution::{Belief, Step, StepId};
use crate::problem::Problem;
use crate::scalar::Probability;

use super::plan::Plan;
use super::PlanError;

pub const DEFAULT_MAX_LINEARIZATIONS: usize = 10_000;

/// The best linearization found and its goal probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment<P> {
    pub sequence: Vec<Step<P>>,
    pub probability: P,
    /// Complete linearizations evaluated.
    pub linearizations: usize,
}

pub fn assess<P: Probability>(plan: &Plan<P>, problem: &Problem<P>) -> Result<Assessment<P>, PlanError> {
    assess_with_limit(plan, problem, DEFAULT_MAX_LINEARIZATIONS)
}

/// Returns the maximizing linearization, or the first one whose probability
/// exceeds the problem threshold.
pub fn assess_with_limit<P: Probability>(
    plan: &Plan<P>,
    problem: &Problem<P>,
    max_linearizations: usize,
) -> Result<Assessment<P>, PlanError> {
    let ids: Vec<StepId> = plan.action_steps().map(|(id, _)| id).collect();
    let steps: Vec<Step<P>> = ids.iter().map(|&id| plan.as_step(id)).collect();
    // predecessors[i]: indices (into ids) that must come before ids[i]
    let predecessors: Vec<Vec<usize>> = ids
        .iter()
        .map(|&b| ids.iter().enumerate().filter(|(_, &a)| plan.precedes(a, b)).map(|(i, _)| i).collect())
        .collect();

    let mut walk = Walk {
        problem,
        steps: &steps,
        predecessors: &predecessors,
        placed: vec![false; ids.len()],
        prefix: Vec::with_capacity(ids.len()),
        best: None,
        count: 0,
        limit: max_linearizations,
        done: false,
    };
    walk.visit(&problem.initial_belief())?;
    let (order, probability) = walk.best.expect("at least one linearization");
    Ok(Assessment {
        sequence: order.into_iter().map(|i| steps[i].clone()).collect(),
        probability,
        linearizations: walk.count,
    })
}

struct Walk<'a, P> {
    problem: &'a Problem<P>,
    steps: &'a [Step<P>],
    predecessors: &'a [Vec<usize>],
    placed: Vec<bool>,
    prefix: Vec<usize>,
    best: Option<(Vec<usize>, P)>,
    count: usize,
    limit: usize,
    done: bool,
}

impl<P: Probability> Walk<'_, P> {
    fn visit(&mut self, belief: &Belief<P>) -> Result<(), PlanError> {
        if self.prefix.len() == self.steps.len() {
            self.count += 1;
            if self.count > self.limit {
                return Err(PlanError::AssessmentBudget(self.limit));
            }
            let p = belief.probability(self.problem.goal())?;
            if self.best.as_ref().is_none_or(|(_, b)| p > *b) {
                self.done = p > *self.problem.threshold();
                self.best = Some((self.prefix.clone(), p));
            }
            return Ok(());
        }
        for i in 0..self.steps.len() {
            if self.done {
                break;
            }
            if self.placed[i] || self.predecessors[i].iter().any(|&j| !self.placed[j]) {
                continue;
            }
            let next = belief.apply(&self.steps[i])?;
            self.placed[i] = true;
            self.prefix.push(i);
            let result = self.visit(&next);
            self.prefix.pop();
            self.placed[i] = false;
            result?;
        }
        Ok(())
    }
}
