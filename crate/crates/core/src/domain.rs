//! Propositions, states, expressions and probabilistic actions.
//!
//! States are total assignments stored as a bitset, so a domain holds at most
//! [`MAX_PROPOSITIONS`] propositions. Expressions (triggers, goals, effect
//! sets) are consistent conjunctions of literals kept as a mask/value pair,
//! which makes both `holds` and `res` single bit operations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Not;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{self, Probability};

pub const MAX_PROPOSITIONS: usize = 64;

/// Tolerance on per-trigger probability sums.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("proposition names must be nonempty")]
    EmptyPropositionName,
    #[error("proposition `{0}` declared more than once")]
    DuplicateProposition(String),
    #[error("{0} propositions declared, at most {MAX_PROPOSITIONS} are supported")]
    TooManyPropositions(usize),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("proposition #{0} appears with both polarities")]
    Contradictory(usize),
    #[error("proposition #{prop} is outside the state's domain of {width} propositions")]
    DomainMismatch { prop: usize, width: usize },
    #[error("state does not assign proposition #{0}")]
    IncompleteState(usize),
    #[error("consequence `{consequence}` has probability {value}, expected a value in (0, 1]")]
    ProbabilityOutOfRange { consequence: String, value: String },
    #[error("action `{0}` has no consequences")]
    EmptyAction(String),
    #[error("no trigger of action `{0}` holds in the state")]
    NoTriggerSatisfied(String),
    #[error("more than one trigger of action `{0}` holds in the state")]
    AmbiguousTriggers(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(u8);

impl PropId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    fn bit(self) -> u64 {
        1u64 << self.0
    }
}

impl From<u8> for PropId {
    fn from(index: u8) -> Self {
        PropId(index)
    }
}

/// The named proposition set of a problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Propositions {
    names: Vec<String>,
    index: HashMap<String, PropId>,
}

impl Propositions {
    pub fn new<I, S>(names: I) -> Result<Self, DomainError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Propositions { names: Vec::new(), index: HashMap::new() };
        for name in names {
            let name = name.into();
            if name.is_empty() {
                return Err(DomainError::EmptyPropositionName);
            }
            if out.index.contains_key(&name) {
                return Err(DomainError::DuplicateProposition(name));
            }
            if out.names.len() == MAX_PROPOSITIONS {
                return Err(DomainError::TooManyPropositions(out.names.len() + 1));
            }
            out.index.insert(name.clone(), PropId(out.names.len() as u8));
            out.names.push(name);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<PropId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: PropId) -> &str {
        &self.names[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = PropId> {
        (0..self.names.len() as u8).map(PropId)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `P` or `!P`.
    pub fn parse_literal(&self, text: &str) -> Result<Literal, DomainError> {
        let (positive, name) = match text.strip_prefix('!') {
            Some(rest) => (false, rest),
            None => (true, text),
        };
        let prop = self.id(name).ok_or_else(|| DomainError::UnknownProposition(name.to_string()))?;
        Ok(Literal::new(prop, positive))
    }

    pub fn literal_text(&self, literal: Literal) -> String {
        let name = self.name(literal.prop);
        if literal.positive {
            name.to_string()
        } else {
            format!("!{name}")
        }
    }

    /// Space-separated literals, or `-` for the empty conjunction.
    pub fn expression_text(&self, expr: &Expression) -> String {
        if expr.is_empty() {
            return "-".to_string();
        }
        expr.literals().iter().map(|l| self.literal_text(*l)).collect::<Vec<_>>().join(" ")
    }

    pub fn state_text(&self, state: &State) -> String {
        self.expression_text(&state.to_expression())
    }

    /// Every total assignment over this proposition set. Panics above 24
    /// propositions; only meant for small exhaustive checks.
    pub fn all_states(&self) -> impl Iterator<Item = State> {
        all_states(self.len())
    }
}

pub(crate) fn all_states(width: usize) -> impl Iterator<Item = State> {
    assert!(width <= 24, "refusing to enumerate 2^{width} states");
    (0..1u64 << width).map(move |bits| State { bits, width: width as u8 })
}

/// A proposition with a polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub prop: PropId,
    pub positive: bool,
}

impl Literal {
    pub fn new(prop: PropId, positive: bool) -> Self {
        Literal { prop, positive }
    }

    pub fn pos(prop: PropId) -> Self {
        Literal::new(prop, true)
    }

    pub fn neg(prop: PropId) -> Self {
        Literal::new(prop, false)
    }
}

impl Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        Literal { prop: self.prop, positive: !self.positive }
    }
}

/// A total assignment of polarities to the domain propositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    bits: u64,
    width: u8,
}

impl State {
    /// Builds a state from literals that mention every proposition exactly once.
    pub fn from_literals(width: usize, literals: impl IntoIterator<Item = Literal>) -> Result<Self, DomainError> {
        if width > MAX_PROPOSITIONS {
            return Err(DomainError::TooManyPropositions(width));
        }
        let expr = Expression::new(literals)?;
        if let Some(l) = expr.literals().iter().find(|l| l.prop.index() >= width) {
            return Err(DomainError::DomainMismatch { prop: l.prop.index(), width });
        }
        let full = full_mask(width);
        if expr.mask != full {
            let missing = (!expr.mask & full).trailing_zeros() as usize;
            return Err(DomainError::IncompleteState(missing));
        }
        Ok(State { bits: expr.values, width: width as u8 })
    }

    /// All propositions false.
    pub fn all_false(width: usize) -> Self {
        assert!(width <= MAX_PROPOSITIONS);
        State { bits: 0, width: width as u8 }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn value(&self, prop: PropId) -> Result<bool, DomainError> {
        self.check(prop)?;
        Ok(self.bits & prop.bit() != 0)
    }

    pub fn satisfies(&self, literal: Literal) -> Result<bool, DomainError> {
        Ok(self.value(literal.prop)? == literal.positive)
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        (0..self.width).map(move |i| Literal::new(PropId(i), self.bits & (1 << i) != 0))
    }

    /// The state as a (total) conjunction.
    pub fn to_expression(&self) -> Expression {
        Expression::from_masks(full_mask(self.width()), self.bits)
    }

    fn check(&self, prop: PropId) -> Result<(), DomainError> {
        if prop.index() >= self.width() {
            Err(DomainError::DomainMismatch { prop: prop.index(), width: self.width() })
        } else {
            Ok(())
        }
    }
}

fn full_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A consistent conjunction of literals. Used for triggers, goals and effect
/// sets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Expression {
    mask: u64,
    values: u64,
}

/// Effect sets share the representation of expressions: a consistent set of
/// literals, applied by [`res`].
pub type EffectSet = Expression;

impl Expression {
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self, DomainError> {
        let mut mask = 0u64;
        let mut values = 0u64;
        for l in literals {
            let bit = l.prop.bit();
            let v = if l.positive { bit } else { 0 };
            if mask & bit != 0 && values & bit != v {
                return Err(DomainError::Contradictory(l.prop.index()));
            }
            mask |= bit;
            values |= v;
        }
        Ok(Expression { mask, values })
    }

    pub fn empty() -> Self {
        Expression::default()
    }

    fn from_masks(mask: u64, values: u64) -> Self {
        Expression { mask, values: values & mask }
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Literals in proposition order.
    pub fn literals(&self) -> Vec<Literal> {
        let mut out = Vec::with_capacity(self.len());
        let mut rest = self.mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as u8;
            rest &= rest - 1;
            out.push(Literal::new(PropId(i), self.values & (1 << i) != 0));
        }
        out
    }

    pub fn contains(&self, literal: Literal) -> bool {
        let bit = literal.prop.bit();
        self.mask & bit != 0 && (self.values & bit != 0) == literal.positive
    }

    pub fn mentions(&self, prop: PropId) -> bool {
        self.mask & prop.bit() != 0
    }

    /// True iff no state satisfies both (some proposition has opposite
    /// polarities in the two).
    pub fn excludes(&self, other: &Expression) -> bool {
        (self.mask & other.mask & (self.values ^ other.values)) != 0
    }

    /// Conjunction of two compatible expressions.
    pub fn and(&self, other: &Expression) -> Result<Expression, DomainError> {
        if self.excludes(other) {
            let clash = (self.mask & other.mask & (self.values ^ other.values)).trailing_zeros();
            return Err(DomainError::Contradictory(clash as usize));
        }
        Ok(Expression { mask: self.mask | other.mask, values: self.values | other.values })
    }

    pub fn is_satisfied_by(&self, state: &State) -> Result<bool, DomainError> {
        self.check_domain(state)?;
        Ok(state.bits & self.mask == self.values)
    }

    fn check_domain(&self, state: &State) -> Result<(), DomainError> {
        let outside = self.mask & !full_mask(state.width());
        if outside != 0 {
            return Err(DomainError::DomainMismatch { prop: outside.trailing_zeros() as usize, width: state.width() });
        }
        Ok(())
    }
}

/// Probability that `expr` is true in `state`: one if every literal holds,
/// zero otherwise.
pub fn holds<P: Probability>(expr: &Expression, state: &State) -> Result<P, DomainError> {
    Ok(if expr.is_satisfied_by(state)? { P::one() } else { P::zero() })
}

/// Applies an effect set: every mentioned proposition takes the effect's
/// polarity, everything else is unchanged.
pub fn res(effects: &EffectSet, state: &State) -> Result<State, DomainError> {
    effects.check_domain(state)?;
    Ok(State { bits: (state.bits & !effects.mask) | effects.values, width: state.width })
}

/// The report an action emits; consequences with equal labels form one
/// discernible equivalence class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub const SILENT: &'static str = "-";

    pub fn new(name: impl AsRef<str>) -> Self {
        Label(Arc::from(name.as_ref()))
    }

    pub fn silent() -> Self {
        Label::new(Self::SILENT)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_silent(&self) -> bool {
        &*self.0 == Self::SILENT
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

/// One outcome of an action: when `trigger` holds it occurs with
/// `probability`, applies `effects` and reports `label`.
#[derive(Debug, Clone, PartialEq)]
pub struct Consequence<P> {
    pub name: String,
    pub trigger: Expression,
    pub probability: P,
    pub effects: EffectSet,
    pub label: Label,
}

impl<P: Probability> Consequence<P> {
    pub fn new(
        name: impl Into<String>,
        trigger: Expression,
        probability: P,
        effects: EffectSet,
        label: Label,
    ) -> Result<Self, DomainError> {
        let name = name.into();
        if !scalar::in_unit_interval(&probability) {
            return Err(DomainError::ProbabilityOutOfRange { consequence: name, value: probability.to_string() });
        }
        Ok(Consequence { name, trigger, probability, effects, label })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action<P> {
    name: String,
    consequences: Vec<Consequence<P>>,
}

/// A realized consequence of [`Action::transition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<P> {
    pub consequence: usize,
    pub state: State,
    pub label: Label,
    pub probability: P,
}

impl<P: Probability> Action<P> {
    pub fn new(name: impl Into<String>, consequences: Vec<Consequence<P>>) -> Result<Self, DomainError> {
        let name = name.into();
        if consequences.is_empty() {
            return Err(DomainError::EmptyAction(name));
        }
        Ok(Action { name, consequences })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn consequences(&self) -> &[Consequence<P>] {
        &self.consequences
    }

    pub fn consequence(&self, index: usize) -> &Consequence<P> {
        &self.consequences[index]
    }

    /// Consequence indices grouped by observation label.
    pub fn decs(&self) -> BTreeMap<Label, Vec<usize>> {
        let mut out: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (i, c) in self.consequences.iter().enumerate() {
            out.entry(c.label.clone()).or_default().push(i);
        }
        out
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        self.consequences.iter().map(|c| c.label.clone()).collect()
    }

    /// More than one discernible equivalence class.
    pub fn is_informational(&self) -> bool {
        self.labels().len() >= 2
    }

    /// Some consequence changes the world.
    pub fn is_causal(&self) -> bool {
        self.consequences.iter().any(|c| !c.effects.is_empty())
    }

    /// Distinct triggers in order of first appearance, each with the indices
    /// of the consequences that share it.
    pub fn trigger_groups(&self) -> Vec<(Expression, Vec<usize>)> {
        let mut groups: Vec<(Expression, Vec<usize>)> = Vec::new();
        for (i, c) in self.consequences.iter().enumerate() {
            match groups.iter_mut().find(|(t, _)| *t == c.trigger) {
                Some((_, members)) => members.push(i),
                None => groups.push((c.trigger.clone(), vec![i])),
            }
        }
        groups
    }

    /// Indices of the consequences whose (unique) trigger holds in `state`.
    pub fn active_group(&self, state: &State) -> Result<Vec<usize>, DomainError> {
        let mut found: Option<Vec<usize>> = None;
        for (trigger, members) in self.trigger_groups() {
            if trigger.is_satisfied_by(state)? {
                if found.is_some() {
                    return Err(DomainError::AmbiguousTriggers(self.name.clone()));
                }
                found = Some(members);
            }
        }
        found.ok_or_else(|| DomainError::NoTriggerSatisfied(self.name.clone()))
    }

    /// Distribution over successor states and reports when executed in
    /// `state`.
    pub fn transition(&self, state: &State) -> Result<Vec<Outcome<P>>, DomainError> {
        self.active_group(state)?
            .into_iter()
            .map(|i| {
                let c = &self.consequences[i];
                Ok(Outcome {
                    consequence: i,
                    state: res(&c.effects, state)?,
                    label: c.label.clone(),
                    probability: c.probability.clone(),
                })
            })
            .collect()
    }
}

/// A reason an action definition is not a well-formed probabilistic
/// transition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Two distinct triggers can hold at once; `witness` satisfies both.
    OverlappingTriggers {
        first: Expression,
        second: Expression,
        witness: Expression,
    },
    ProbabilitySum {
        trigger: Expression,
        sum: f64,
    },
    /// `witness` (an assignment to the trigger propositions) satisfies no trigger.
    NotExhaustive {
        witness: Expression,
    },
    ProbabilityOutOfRange {
        consequence: String,
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub action: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self, props: &Propositions) -> String {
        if self.is_valid() {
            return format!("action {}: valid", self.action);
        }
        let mut lines = vec![format!("action {}: invalid", self.action)];
        for v in &self.violations {
            lines.push(match v {
                Violation::OverlappingTriggers { first, second, witness } => format!(
                    "  triggers [{}] and [{}] are not mutually exclusive (both hold under {})",
                    props.expression_text(first),
                    props.expression_text(second),
                    props.expression_text(witness)
                ),
                Violation::ProbabilitySum { trigger, sum } => format!(
                    "  probabilities for trigger [{}] sum to {}, expected 1",
                    props.expression_text(trigger),
                    scalar::short_decimal(*sum)
                ),
                Violation::NotExhaustive { witness } => {
                    format!("  triggers are not exhaustive: none holds under {}", props.expression_text(witness))
                }
                Violation::ProbabilityOutOfRange { consequence, value } => {
                    format!("  consequence {consequence} has probability {value} outside (0, 1]")
                }
            });
        }
        lines.join("\n")
    }
}

/// Checks mutual exclusion and exhaustiveness of the triggers and that each
/// trigger group's probabilities sum to one.
pub fn validate_action<P: Probability>(action: &Action<P>) -> ValidationReport {
    let mut violations = Vec::new();

    for c in &action.consequences {
        if !scalar::in_unit_interval(&c.probability) {
            violations
                .push(Violation::ProbabilityOutOfRange { consequence: c.name.clone(), value: c.probability.as_f64() });
        }
    }

    let groups = action.trigger_groups();
    for (i, (first, _)) in groups.iter().enumerate() {
        for (second, _) in &groups[i + 1..] {
            if !first.excludes(second) {
                let witness = first.and(second).expect("non-excluding triggers conjoin");
                violations.push(Violation::OverlappingTriggers {
                    first: first.clone(),
                    second: second.clone(),
                    witness,
                });
            }
        }
    }

    for (trigger, members) in &groups {
        let total: P = scalar::sum(members.iter().map(|&i| &action.consequences[i].probability));
        if !scalar::is_one_within(&total, SUM_TOLERANCE) {
            violations.push(Violation::ProbabilitySum { trigger: trigger.clone(), sum: total.as_f64() });
        }
    }

    // Only propositions mentioned by some trigger affect trigger truth.
    let mentioned: u64 = groups.iter().fold(0, |m, (t, _)| m | t.mask);
    let props: Vec<u8> = (0..64u8).filter(|i| mentioned & (1 << i) != 0).collect();
    for combo in 0..1u64 << props.len() {
        let values =
            props.iter().enumerate().filter(|(k, _)| combo & (1 << k) != 0).fold(0u64, |v, (_, &p)| v | (1 << p));
        if !groups.iter().any(|(t, _)| values & t.mask == t.values) {
            violations.push(Violation::NotExhaustive { witness: Expression::from_masks(mentioned, values) });
            break;
        }
    }

    ValidationReport { action: action.name.clone(), violations }
}
