//! Monte Carlo execution of step sequences.
//!
//! Sample `i` of a run seeded with `seed` draws from its own ChaCha stream
//! `(seed, i)`, so estimates are identical whether samples run sequentially
//! or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{res, Label, State};
use crate::execution::{check_sequence, ExecutionContext, ExecutionError, Step, StepId};
use crate::problem::Problem;
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub step: StepId,
    /// Consequence index and label, or `None` when the context did not match.
    pub fired: Option<(usize, Label)>,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub initial: State,
    pub events: Vec<TraceEvent>,
    pub final_state: State,
    pub received: ExecutionContext,
}

impl Trace {
    pub fn executed(&self, step: StepId) -> bool {
        self.received.executed(step)
    }
}

/// Estimated goal probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub successes: u64,
}

/// The generator used for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn pick<'a, P: Probability, T>(rng: &mut impl Rng, options: impl Iterator<Item = (T, &'a P)> + Clone) -> T {
    let total: f64 = options.clone().map(|(_, p)| p.as_f64()).sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = None;
    for (item, p) in options {
        let w = p.as_f64();
        if u < w {
            return item;
        }
        u -= w;
        last = Some(item);
    }
    last.expect("nonempty choice")
}

/// Samples one execution: an initial state, then for each step either a skip
/// or one consequence of its active trigger group.
pub fn trace_sample<P: Probability>(
    problem: &Problem<P>,
    steps: &[Step<P>],
    rng: &mut impl Rng,
) -> Result<Trace, ExecutionError> {
    check_sequence(steps)?;
    run_trace(problem, steps, rng)
}

fn run_trace<P: Probability>(
    problem: &Problem<P>,
    steps: &[Step<P>],
    rng: &mut impl Rng,
) -> Result<Trace, ExecutionError> {
    let initial = pick(rng, problem.initial().iter().map(|(s, m)| (*s, m)));
    let mut state = initial;
    let mut received = ExecutionContext::new();
    let mut events = Vec::with_capacity(steps.len());
    for step in steps {
        if !step.context.matches(&received) {
            events.push(TraceEvent { step: step.index, fired: None, state });
            continue;
        }
        let group = step.action.active_group(&state)?;
        let action = &step.action;
        let chosen = pick(rng, group.iter().map(|&i| (i, &action.consequence(i).probability)));
        let c = action.consequence(chosen);
        state = res(&c.effects, &state)?;
        received.record(step.index, c.label.clone());
        events.push(TraceEvent { step: step.index, fired: Some((chosen, c.label.clone())), state });
    }
    Ok(Trace { initial, events, final_state: state, received })
}

/// Estimates the goal probability of `steps` from `samples` independent traces.
pub fn simulate<P: Probability>(
    problem: &Problem<P>,
    steps: &[Step<P>],
    samples: u64,
    seed: u64,
) -> Result<Estimate, ExecutionError> {
    if samples == 0 {
        return Err(ExecutionError::NoSamples);
    }
    check_sequence(steps)?;
    let successes = (0..samples)
        .into_par_iter()
        .map(|i| {
            let trace = run_trace(problem, steps, &mut sample_rng(seed, i))?;
            Ok::<u64, ExecutionError>(u64::from(problem.goal().is_satisfied_by(&trace.final_state)?))
        })
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    let p = successes as f64 / samples as f64;
    Ok(Estimate { estimate: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), samples, successes })
}
