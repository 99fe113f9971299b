//! Least-commitment plan-space search with contingent branching.

mod assess;
mod plan;
mod refine;
mod search;

use thiserror::Error;

use crate::domain::DomainError;
use crate::execution::ExecutionError;

pub use assess::{assess, assess_with_limit, Assessment, DEFAULT_MAX_LINEARIZATIONS};
pub use plan::{
    goal_action, initial_action, CausalLink, Plan, PlanStep, Signature, StepRole, Subgoal, Threat, GOAL, INITIAL,
};
pub use refine::{branch, label_partitions, refine, RefineConfig, DEFAULT_MAX_ACTION_COPIES};
pub use search::{plan, FailureReason, PlanningFailure, SearchConfig, SearchStats, Solution, DEFAULT_MAX_REFINEMENTS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Execution(#[from] ExecutionError),
    #[error("more than {0} linearizations; assessment budget exceeded")]
    AssessmentBudget(usize),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("malformed plan: {0}")]
    Malformed(String),
}

impl From<DomainError> for PlanError {
    fn from(e: DomainError) -> Self {
        PlanError::Execution(e.into())
    }
}
