use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{validate_action, Action, DomainError, Expression, Propositions, State, SUM_TOLERANCE};
use crate::execution::Belief;
use crate::scalar::{self, Probability};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("action `{0}` defined more than once")]
    DuplicateAction(String),
    #[error("{0}")]
    InvalidAction(String),
    #[error("no initial states")]
    NoInitialStates,
    #[error("initial state listed more than once")]
    DuplicateInitialState,
    #[error("initial state mass {0} must be positive")]
    NonPositiveInitialMass(f64),
    #[error("initial masses sum to {}, expected 1", crate::scalar::short_decimal(*.0))]
    InitialMassSum(f64),
    #[error("threshold {0} must lie in (0, 1]")]
    Threshold(f64),
}

/// A planning problem: propositions, actions, an initial distribution over
/// states, a goal conjunction and a success threshold.
#[derive(Debug, Clone)]
pub struct Problem<P> {
    propositions: Arc<Propositions>,
    actions: Vec<Arc<Action<P>>>,
    initial: Vec<(State, P)>,
    goal: Expression,
    threshold: P,
}

impl<P: Probability> Problem<P> {
    pub fn new(
        propositions: Propositions,
        actions: Vec<Action<P>>,
        initial: Vec<(State, P)>,
        goal: Expression,
        threshold: P,
    ) -> Result<Self, ProblemError> {
        let mut names = BTreeSet::new();
        for a in &actions {
            if !names.insert(a.name().to_string()) {
                return Err(ProblemError::DuplicateAction(a.name().to_string()));
            }
            let report = validate_action(a);
            if !report.is_valid() {
                return Err(ProblemError::InvalidAction(report.render(&propositions)));
            }
        }
        if initial.is_empty() {
            return Err(ProblemError::NoInitialStates);
        }
        let mut seen = BTreeSet::new();
        for (s, mass) in &initial {
            if s.width() != propositions.len() {
                return Err(DomainError::DomainMismatch { prop: s.width(), width: propositions.len() }.into());
            }
            if !seen.insert(*s) {
                return Err(ProblemError::DuplicateInitialState);
            }
            if *mass <= P::zero() {
                return Err(ProblemError::NonPositiveInitialMass(mass.as_f64()));
            }
        }
        let total: P = scalar::sum(initial.iter().map(|(_, m)| m));
        if !scalar::is_one_within(&total, SUM_TOLERANCE) {
            return Err(ProblemError::InitialMassSum(total.as_f64()));
        }
        goal.is_satisfied_by(&initial[0].0)?;
        if !scalar::in_unit_interval(&threshold) {
            return Err(ProblemError::Threshold(threshold.as_f64()));
        }
        Ok(Problem {
            propositions: Arc::new(propositions),
            actions: actions.into_iter().map(Arc::new).collect(),
            initial,
            goal,
            threshold,
        })
    }

    pub fn propositions(&self) -> &Propositions {
        &self.propositions
    }

    pub fn actions(&self) -> &[Arc<Action<P>>] {
        &self.actions
    }

    pub fn action(&self, name: &str) -> Option<&Arc<Action<P>>> {
        self.actions.iter().find(|a| a.name() == name)
    }

    pub fn initial(&self) -> &[(State, P)] {
        &self.initial
    }

    pub fn goal(&self) -> &Expression {
        &self.goal
    }

    pub fn threshold(&self) -> &P {
        &self.threshold
    }

    /// Same problem with a different success threshold.
    pub fn with_threshold(&self, threshold: P) -> Result<Self, ProblemError> {
        if !scalar::in_unit_interval(&threshold) {
            return Err(ProblemError::Threshold(threshold.as_f64()));
        }
        Ok(Problem { threshold, ..self.clone() })
    }

    /// The initial distribution paired with the empty execution context.
    pub fn initial_belief(&self) -> Belief<P> {
        Belief::from_states(self.initial.iter().cloned())
    }
}
