use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use crate::execution::Step;
use crate::problem::Problem;
use crate::scalar::Probability;

use super::assess::{assess_with_limit, DEFAULT_MAX_LINEARIZATIONS};
use super::plan::Plan;
use super::plan::Signature;
use super::refine::{refine_with_signatures, RefineConfig, DEFAULT_MAX_ACTION_COPIES};
use super::PlanError;

pub const DEFAULT_MAX_REFINEMENTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Plans expanded before giving up.
    pub max_refinements: usize,
    pub max_linearizations: usize,
    pub max_action_copies: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_refinements: DEFAULT_MAX_REFINEMENTS,
            max_linearizations: DEFAULT_MAX_LINEARIZATIONS,
            max_action_copies: DEFAULT_MAX_ACTION_COPIES,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
    pub duplicates: usize,
    /// Successors dropped because assessment exceeded its linearization cap.
    pub over_budget: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<P> {
    /// Totally ordered steps with contexts.
    pub steps: Vec<Step<P>>,
    pub probability: P,
    pub plan: Plan<P>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    FrontierExhausted,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct PlanningFailure<P> {
    pub reason: FailureReason,
    /// Best assessed sequence seen during the search.
    pub best: Option<(Vec<Step<P>>, P)>,
    pub stats: SearchStats,
}

impl<P: Probability> fmt::Display for PlanningFailure<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            FailureReason::FrontierExhausted => write!(f, "no refinements left")?,
            FailureReason::BudgetExhausted => write!(f, "refinement budget of {} exhausted", self.stats.expanded)?,
        }
        if let Some((_, p)) = &self.best {
            write!(f, "; best plan found has probability {}", p.as_f64())?;
        }
        Ok(())
    }
}

impl<P: Probability> std::error::Error for PlanningFailure<P> {}

/// An assessed probability with its witness linearization.
type Scored<P> = (P, Vec<Step<P>>);

struct Entry<P> {
    probability: P,
    steps: usize,
    seq: u64,
    plan: Plan<P>,
    sequence: Vec<Step<P>>,
}

impl<P: Probability> Entry<P> {
    fn key(&self) -> (Reverse<usize>, Reverse<u64>) {
        (Reverse(self.steps), Reverse(self.seq))
    }
}

impl<P: Probability> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P: Probability> Eq for Entry<P> {}

impl<P: Probability> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Higher probability first, then fewer steps, then insertion order.
impl<P: Probability> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.probability
            .partial_cmp(&other.probability)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.key().cmp(&other.key()))
    }
}

/// Best-first plan-space search from the null plan.
///
/// Each popped plan whose assessed probability reaches the threshold is
/// returned as the linearization its assessment found; otherwise all of its
/// refinements are assessed and queued.
pub fn plan<P: Probability>(problem: &Problem<P>, config: &SearchConfig) -> Result<Solution<P>, PlanningFailure<P>> {
    let refine_config = RefineConfig { max_action_copies: config.max_action_copies };
    let mut stats = SearchStats::default();
    let mut seen: HashSet<Signature> = HashSet::new();
    let mut frontier: BinaryHeap<Entry<P>> = BinaryHeap::new();
    let mut best: Option<(Vec<Step<P>>, P)> = None;
    let mut seq = 0u64;
    let mut assessed: HashMap<String, Result<Scored<P>, PlanError>> = HashMap::new();

    let mut enqueue = |signature: Signature,
                       plan: Plan<P>,
                       frontier: &mut BinaryHeap<Entry<P>>,
                       best: &mut Option<(Vec<Step<P>>, P)>,
                       stats: &mut SearchStats| {
        stats.generated += 1;
        if !seen.insert(signature) {
            stats.duplicates += 1;
            return;
        }
        let result = assessed
            .entry(plan.execution_key())
            .or_insert_with(|| {
                assess_with_limit(&plan, problem, config.max_linearizations).map(|a| (a.probability, a.sequence))
            })
            .clone();
        match result {
            Ok((probability, sequence)) => {
                if best.as_ref().is_none_or(|(_, p)| probability > *p) {
                    *best = Some((sequence.clone(), probability.clone()));
                }
                seq += 1;
                frontier.push(Entry { probability, steps: plan.action_step_count(), seq, plan, sequence });
            }
            Err(PlanError::AssessmentBudget(_)) => stats.over_budget += 1,
            Err(e) => panic!("assessment of a well-formed plan failed: {e}"),
        }
    };

    let null = Plan::null(problem);
    enqueue(null.signature(), null, &mut frontier, &mut best, &mut stats);

    while let Some(entry) = frontier.pop() {
        if entry.probability >= *problem.threshold() {
            return Ok(Solution { steps: entry.sequence, probability: entry.probability, plan: entry.plan, stats });
        }
        if stats.expanded >= config.max_refinements {
            return Err(PlanningFailure { reason: FailureReason::BudgetExhausted, best, stats });
        }
        stats.expanded += 1;
        for (signature, next) in refine_with_signatures(&entry.plan, problem, &refine_config) {
            enqueue(signature, next, &mut frontier, &mut best, &mut stats);
        }
    }
    Err(PlanningFailure { reason: FailureReason::FrontierExhausted, best, stats })
}
