//! Plan files: one `step` line per step in execution order, optionally
//! followed by the plan's probability.
//!
//! ```text
//! step 1 inspect context -
//! step 2 paint context -
//! step 3 ship context inspect.ok
//! step 4 reject context 1.bad
//! step 5 notify context -
//! probability 0.9215
//! ```
//!
//! A context reference names an earlier step by number or, when exactly one
//! earlier step runs that action, by action name. Several labels for the
//! same step mean "any of these".

use std::collections::BTreeMap;

use crate::domain::Label;
use crate::execution::{Context, Step, StepId};
use crate::problem::Problem;
use crate::scalar::Probability;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanFile<P> {
    pub steps: Vec<Step<P>>,
    pub probability: Option<P>,
}

pub fn parse_plan<P: Probability>(text: &str, problem: &Problem<P>) -> Result<Vec<Step<P>>, ParseError> {
    Ok(parse_plan_file(text, problem)?.steps)
}

pub fn parse_plan_file<P: Probability>(text: &str, problem: &Problem<P>) -> Result<PlanFile<P>, ParseError> {
    let mut steps: Vec<Step<P>> = Vec::new();
    let mut probability = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| ParseError::new(line, msg);
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if probability.is_some() {
            return Err(err("nothing may follow the `probability` line".into()));
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "step" => {
                let usage = "expected `step <n> <action> context <-|ref.label[,ref.label...]>`";
                if tokens.len() < 5 || tokens[3] != "context" {
                    return Err(err(usage.into()));
                }
                let index: u32 = tokens[1].parse().map_err(|_| err(format!("bad step number `{}`", tokens[1])))?;
                if steps.iter().any(|s| s.index.0 == index) {
                    return Err(err(format!("step {index} defined more than once")));
                }
                let action =
                    problem.action(tokens[2]).ok_or_else(|| err(format!("unknown action `{}`", tokens[2])))?.clone();
                let context = parse_context(&tokens[4..], &steps).map_err(err)?;
                steps.push(Step { index: StepId(index), action, context });
            }
            "probability" => {
                let [_, value] = tokens[..] else {
                    return Err(err("expected `probability <x>`".into()));
                };
                probability = Some(P::parse_literal(value).ok_or_else(|| err(format!("bad probability `{value}`")))?);
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    Ok(PlanFile { steps, probability })
}

fn parse_context<P: Probability>(tokens: &[&str], earlier: &[Step<P>]) -> Result<Context, String> {
    let items: Vec<&str> = tokens.iter().flat_map(|t| t.split(',')).filter(|t| !t.is_empty()).collect();
    if items == ["-"] {
        return Ok(Context::empty());
    }
    let mut context = Context::empty();
    for item in items {
        let (reference, label) =
            item.rsplit_once('.').ok_or_else(|| format!("context entry `{item}` is not of the form ref.label"))?;
        let target = if let Ok(n) = reference.parse::<u32>() {
            earlier
                .iter()
                .find(|s| s.index.0 == n)
                .ok_or_else(|| format!("context references step {n}, which is not an earlier step"))?
        } else {
            let mut matching = earlier.iter().filter(|s| s.action.name() == reference);
            match (matching.next(), matching.next()) {
                (Some(s), None) => s,
                (None, _) => return Err(format!("context references `{reference}`, which is not an earlier step")),
                (Some(_), Some(_)) => {
                    return Err(format!("context reference `{reference}` is ambiguous; use a step number"))
                }
            }
        };
        let label = Label::new(label);
        if !target.action.labels().contains(&label) {
            return Err(format!("step {} ({}) never reports `{label}`", target.index, target.action.name()));
        }
        context = context.allowing(target.index, [label]);
    }
    Ok(context)
}

/// Renders steps in the format [`parse_plan`] reads.
pub fn format_plan<P: Probability>(steps: &[Step<P>], probability: Option<&P>) -> String {
    let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
    for s in steps {
        *uses.entry(s.action.name()).or_default() += 1;
    }
    let reference = |id: StepId| match steps.iter().find(|s| s.index == id) {
        Some(s) if uses[s.action.name()] == 1 => s.action.name().to_string(),
        _ => id.to_string(),
    };
    let mut out = String::new();
    for s in steps {
        let context = if s.context.is_empty() {
            "-".to_string()
        } else {
            s.context
                .entries()
                .flat_map(|(r, labels)| {
                    let r = reference(r);
                    labels.iter().map(move |l| format!("{r}.{l}"))
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str(&format!("step {} {} context {}\n", s.index, s.action.name(), context));
    }
    if let Some(p) = probability {
        out.push_str(&format!("probability {p}\n"));
    }
    out
}

/// Renumbers steps 1..n in sequence order, rewriting context references.
pub fn renumber<P: Clone>(steps: &[Step<P>]) -> Vec<Step<P>> {
    let map: BTreeMap<StepId, StepId> =
        steps.iter().enumerate().map(|(i, s)| (s.index, StepId(i as u32 + 1))).collect();
    steps
        .iter()
        .map(|s| Step {
            index: map[&s.index],
            action: s.action.clone(),
            context: s.context.remap(|r| map.get(&r).copied().unwrap_or(r)),
        })
        .collect()
}
