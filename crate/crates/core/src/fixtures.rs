//! Bundled example problems and plans.

use crate::execution::Step;
use crate::io::{parse_plan, parse_problem, ParseError};
use crate::problem::Problem;
use crate::scalar::Probability;

/// Paint, process and notify a possibly flawed widget.
pub const WIDGET: &str = include_str!("../fixtures/widget.prob");
/// Widget variant where the wrong processing action is an error.
pub const WIDGET_STRICT: &str = include_str!("../fixtures/widget-strict.prob");
/// A single proposition made true by a paint action that reports success.
pub const TWO_PAINT: &str = include_str!("../fixtures/two-paint.prob");
/// Inspect, paint, then ship or reject depending on the report, then notify.
pub const WIDGET_FINAL_PLAN: &str = include_str!("../fixtures/widget-final.plan");
/// Paint, ship, notify.
pub const WIDGET_NONCONTINGENT_PLAN: &str = include_str!("../fixtures/widget-noncontingent.plan");

pub fn widget<P: Probability>() -> Problem<P> {
    parse_problem(WIDGET).expect("bundled widget problem parses")
}

pub fn widget_strict<P: Probability>() -> Problem<P> {
    parse_problem(WIDGET_STRICT).expect("bundled strict widget problem parses")
}

pub fn two_paint<P: Probability>() -> Problem<P> {
    parse_problem(TWO_PAINT).expect("bundled two-paint problem parses")
}

pub fn plan<P: Probability>(text: &str, problem: &Problem<P>) -> Result<Vec<Step<P>>, ParseError> {
    parse_plan(text, problem)
}
