//! Probabilistic contingent planning.
//!
//! Actions have probabilistic, context-dependent effects and may report
//! observation labels; plans are sequences of steps whose execution can be
//! conditioned on earlier reports. The crate evaluates such plans exactly
//! ([`execution`]) and by sampling ([`simulate`]), and searches for plans
//! that reach a success threshold ([`planner`]).
//!
//! All of the machinery is generic over the probability scalar
//! ([`Probability`]); the aliases below fix it to `f64` or to exact
//! rationals.

pub mod domain;
pub mod execution;
pub mod fixtures;
pub mod io;
pub mod planner;
pub mod problem;
pub mod scalar;
pub mod simulate;

pub use domain::{
    holds, res, validate_action, DomainError, EffectSet, Expression, Label, Literal, PropId, Propositions, State,
    ValidationReport, Violation,
};
pub use execution::{
    execute_sequence, goal_probability, posterior, probability_of, Context, ExecutionContext, ExecutionError, StepId,
};
pub use problem::ProblemError;
pub use scalar::Probability;
pub use simulate::{simulate, trace_sample, Estimate, Trace};

/// Exact rational probabilities.
pub type Exact = num_rational::BigRational;

pub type Action = domain::Action<f64>;
pub type Consequence = domain::Consequence<f64>;
pub type Step = execution::Step<f64>;
pub type Belief = execution::Belief<f64>;
pub type Problem = problem::Problem<f64>;
pub type Plan = planner::Plan<f64>;

pub type ExactAction = domain::Action<Exact>;
pub type ExactStep = execution::Step<Exact>;
pub type ExactBelief = execution::Belief<Exact>;
pub type ExactProblem = problem::Problem<Exact>;
pub type ExactPlan = planner::Plan<Exact>;
