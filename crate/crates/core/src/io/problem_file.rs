//! Line-oriented problem files.
//!
//! ```text
//! # comment
//! propositions FL BL PR PA NO
//! action paint
//!   consequence alpha trigger !PR prob 0.95 effects PA,!BL obs -
//!   consequence beta  trigger !PR prob 0.05 effects -      obs -
//!   consequence gamma trigger PR  prob 1    effects -      obs -
//! initial 0.3 FL BL !PR !PA !NO
//! initial 0.7 !FL !BL !PR !PA !NO
//! goal PR PA NO
//! threshold 0.8
//! ```
//!
//! Literal lists may be separated by commas, whitespace or both; `-` is the
//! empty list. Probabilities are decimals or fractions (`3/10`).

use crate::domain::{
    validate_action, Action, Consequence, DomainError, Expression, Label, Literal, Propositions, State,
    ValidationReport,
};
use crate::problem::{Problem, ProblemError};
use crate::scalar::Probability;

use super::{is_identifier, ParseError};

/// A parsed problem file before the problem-level checks run.
#[derive(Debug, Clone)]
pub struct ProblemDocument<P> {
    pub propositions: Propositions,
    /// Actions with the line of their `action` header.
    pub actions: Vec<(usize, Action<P>)>,
    pub initial: Vec<(usize, State, P)>,
    pub goal: Expression,
    pub threshold: P,
    goal_line: usize,
    threshold_line: usize,
}

impl<P: Probability> ProblemDocument<P> {
    pub fn validation_reports(&self) -> Vec<ValidationReport> {
        self.actions.iter().map(|(_, a)| validate_action(a)).collect()
    }

    /// Validates every action and the initial distribution.
    pub fn into_problem(self) -> Result<Problem<P>, ParseError> {
        for (line, action) in &self.actions {
            let report = validate_action(action);
            if !report.is_valid() {
                return Err(ParseError::new(*line, report.render(&self.propositions)));
            }
        }
        let first_initial = self.initial.first().map_or(0, |(l, _, _)| *l);
        let (goal_line, threshold_line) = (self.goal_line, self.threshold_line);
        Problem::new(
            self.propositions,
            self.actions.into_iter().map(|(_, a)| a).collect(),
            self.initial.into_iter().map(|(_, s, m)| (s, m)).collect(),
            self.goal,
            self.threshold,
        )
        .map_err(|e| {
            let line = match e {
                ProblemError::Threshold(_) => threshold_line,
                ProblemError::Domain(_) => goal_line,
                _ => first_initial,
            };
            ParseError::new(line, e.to_string())
        })
    }
}

pub fn parse_problem<P: Probability>(text: &str) -> Result<Problem<P>, ParseError> {
    parse_problem_document(text)?.into_problem()
}

struct Builder<P> {
    propositions: Option<Propositions>,
    actions: Vec<(usize, String, Vec<Consequence<P>>)>,
    initial: Vec<(usize, State, P)>,
    goal: Option<(usize, Expression)>,
    threshold: Option<(usize, P)>,
}

/// Parses without validating actions or the initial distribution.
pub fn parse_problem_document<P: Probability>(text: &str) -> Result<ProblemDocument<P>, ParseError> {
    let mut b = Builder { propositions: None, actions: Vec::new(), initial: Vec::new(), goal: None, threshold: None };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: String| ParseError::new(line, msg);
        let props = || b.propositions.as_ref().ok_or_else(|| err("`propositions` must come first".into()));
        match tokens[0] {
            "propositions" => {
                if b.propositions.is_some() {
                    return Err(err("duplicate `propositions` line".into()));
                }
                let names: Vec<&str> =
                    tokens[1..].iter().flat_map(|t| t.split(',')).filter(|t| !t.is_empty()).collect();
                if names.is_empty() {
                    return Err(err("no propositions declared".into()));
                }
                if let Some(bad) = names.iter().find(|n| !is_identifier(n)) {
                    return Err(err(format!("`{bad}` is not a valid proposition name")));
                }
                b.propositions = Some(Propositions::new(names).map_err(|e| err(e.to_string()))?);
            }
            "action" => {
                props()?;
                let [_, name] = tokens[..] else {
                    return Err(err("expected `action <name>`".into()));
                };
                if !is_identifier(name) || name.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(err(format!("`{name}` is not a valid action name")));
                }
                if b.actions.iter().any(|(_, n, _)| n == name) {
                    return Err(err(format!("action `{name}` defined more than once")));
                }
                b.actions.push((line, name.to_string(), Vec::new()));
            }
            "consequence" => {
                let c = parse_consequence(props()?, &tokens).map_err(err)?;
                match b.actions.last_mut() {
                    Some((_, _, cs)) => cs.push(c),
                    None => return Err(err("`consequence` outside of an action".into())),
                }
            }
            "initial" => {
                let props = props()?;
                let Some(mass) = tokens.get(1) else {
                    return Err(err("expected `initial <probability> <literals>`".into()));
                };
                let mass = P::parse_literal(mass).ok_or_else(|| err(format!("bad probability `{mass}`")))?;
                let literals = parse_literals(props, &tokens[2..]).map_err(err)?;
                let state = State::from_literals(props.len(), literals).map_err(|e| match e {
                    DomainError::IncompleteState(p) => {
                        err(format!("initial state does not assign `{}`", props.names()[p]))
                    }
                    other => err(describe(props, other)),
                })?;
                b.initial.push((line, state, mass));
            }
            "goal" => {
                if b.goal.is_some() {
                    return Err(err("duplicate `goal` line".into()));
                }
                let props = props()?;
                let literals = parse_literals(props, &tokens[1..]).map_err(err)?;
                let goal = Expression::new(literals).map_err(|e| err(describe(props, e)))?;
                b.goal = Some((line, goal));
            }
            "threshold" => {
                if b.threshold.is_some() {
                    return Err(err("duplicate `threshold` line".into()));
                }
                let [_, value] = tokens[..] else {
                    return Err(err("expected `threshold <probability>`".into()));
                };
                let value = P::parse_literal(value).ok_or_else(|| err(format!("bad probability `{value}`")))?;
                b.threshold = Some((line, value));
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let missing = |what: &str| ParseError::new(last, format!("missing `{what}` section"));
    let propositions = b.propositions.ok_or_else(|| missing("propositions"))?;
    if b.actions.is_empty() {
        return Err(missing("action"));
    }
    if b.initial.is_empty() {
        return Err(missing("initial"));
    }
    let (goal_line, goal) = b.goal.ok_or_else(|| missing("goal"))?;
    let (threshold_line, threshold) = b.threshold.ok_or_else(|| missing("threshold"))?;
    let mut actions = Vec::with_capacity(b.actions.len());
    for (line, name, consequences) in b.actions {
        let action = Action::new(name, consequences).map_err(|e| ParseError::new(line, e.to_string()))?;
        actions.push((line, action));
    }
    Ok(ProblemDocument { propositions, actions, initial: b.initial, goal, threshold, goal_line, threshold_line })
}

fn describe(props: &Propositions, e: DomainError) -> String {
    match e {
        DomainError::Contradictory(p) => format!("`{}` appears with both polarities", props.names()[p]),
        other => other.to_string(),
    }
}

fn parse_literals(props: &Propositions, tokens: &[&str]) -> Result<Vec<Literal>, String> {
    let items: Vec<&str> = tokens.iter().flat_map(|t| t.split(',')).filter(|t| !t.is_empty()).collect();
    if items == ["-"] {
        return Ok(Vec::new());
    }
    items
        .into_iter()
        .map(|t| {
            props.parse_literal(t).map_err(|e| match e {
                DomainError::UnknownProposition(name) => format!("undeclared proposition `{name}`"),
                other => other.to_string(),
            })
        })
        .collect()
}

const KEYWORDS: [&str; 4] = ["trigger", "prob", "effects", "obs"];

/// `consequence <name> trigger <lits|-> prob <x> effects <lits|-> obs <label|->`
fn parse_consequence<P: Probability>(props: &Propositions, tokens: &[&str]) -> Result<Consequence<P>, String> {
    let usage = "expected `consequence <name> trigger <lits|-> prob <x> effects <lits|-> obs <label|->`";
    let name = *tokens.get(1).ok_or(usage)?;
    if KEYWORDS.contains(&name) || !is_identifier(name) {
        return Err(usage.into());
    }
    let mut sections: Vec<(&str, Vec<&str>)> = Vec::new();
    for &t in &tokens[2..] {
        if KEYWORDS.contains(&t) {
            sections.push((t, Vec::new()));
        } else {
            sections.last_mut().ok_or(usage)?.1.push(t);
        }
    }
    let keys: Vec<&str> = sections.iter().map(|(k, _)| *k).collect();
    if keys != KEYWORDS {
        return Err(usage.into());
    }
    let trigger = Expression::new(parse_literals(props, &sections[0].1)?).map_err(|e| describe(props, e))?;
    let [prob] = sections[1].1[..] else {
        return Err(usage.into());
    };
    let probability = P::parse_literal(prob).ok_or_else(|| format!("bad probability `{prob}`"))?;
    let effects = Expression::new(parse_literals(props, &sections[2].1)?).map_err(|e| describe(props, e))?;
    let [label] = sections[3].1[..] else {
        return Err(usage.into());
    };
    if label != Label::SILENT && !is_identifier(label) {
        return Err(format!("`{label}` is not a valid observation label"));
    }
    Consequence::new(name, trigger, probability, effects, Label::new(label)).map_err(|e| match e {
        DomainError::ProbabilityOutOfRange { value, .. } => format!("probability {value} must lie in (0, 1]"),
        other => other.to_string(),
    })
}

fn literal_list(props: &Propositions, expr: &Expression) -> String {
    if expr.is_empty() {
        "-".into()
    } else {
        expr.literals().iter().map(|l| props.literal_text(*l)).collect::<Vec<_>>().join(",")
    }
}

/// Renders a problem in the format [`parse_problem`] reads.
pub fn format_problem<P: Probability>(problem: &Problem<P>) -> String {
    let props = problem.propositions();
    let mut out = format!("propositions {}\n", props.names().join(" "));
    for action in problem.actions() {
        out.push_str(&format!("action {}\n", action.name()));
        for c in action.consequences() {
            out.push_str(&format!(
                "  consequence {} trigger {} prob {} effects {} obs {}\n",
                c.name,
                literal_list(props, &c.trigger),
                c.probability,
                literal_list(props, &c.effects),
                c.label
            ));
        }
    }
    for (state, mass) in problem.initial() {
        out.push_str(&format!("initial {} {}\n", mass, props.state_text(state)));
    }
    out.push_str(&format!("goal {}\n", props.expression_text(problem.goal())));
    out.push_str(&format!("threshold {}\n", problem.threshold()));
    out
}
