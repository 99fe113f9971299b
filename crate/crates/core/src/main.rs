use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use probplan::io::{format_plan, parse_plan, parse_problem, parse_problem_document, renumber};
use probplan::planner::{self, SearchConfig};
use probplan::{goal_probability, simulate, Probability, Problem, Step};

#[derive(Parser)]
#[command(name = "probplan", version, about = "Probabilistic contingent planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every action of a problem file and print a report.
    Validate { problem: PathBuf },
    /// Search for a plan whose success probability reaches the threshold.
    Plan {
        problem: PathBuf,
        /// Overrides the problem file's threshold.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = planner::DEFAULT_MAX_REFINEMENTS)]
        max_refinements: usize,
        #[arg(long, default_value_t = planner::DEFAULT_MAX_ACTION_COPIES)]
        max_action_copies: usize,
    },
    /// Print the exact success probability of a plan.
    Assess { problem: PathBuf, plan: PathBuf },
    /// Estimate a plan's success probability by sampling executions.
    Simulate {
        problem: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit status and message of a failed command.
struct Failure(u8, String);

impl From<String> for Failure {
    fn from(message: String) -> Self {
        Failure(1, message)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<Problem, Failure> {
    parse_problem(&read(path)?).map_err(|e| Failure(1, format!("{}: {e}", path.display())))
}

fn load_plan(path: &Path, problem: &Problem) -> Result<Vec<Step>, Failure> {
    parse_plan(&read(path)?, problem).map_err(|e| Failure(1, format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { problem } => {
            let doc = parse_problem_document::<f64>(&read(&problem)?)
                .map_err(|e| Failure(1, format!("{}: {e}", problem.display())))?;
            let reports = doc.validation_reports();
            let mut valid = true;
            for (report, (_, action)) in reports.iter().zip(&doc.actions) {
                valid &= report.is_valid();
                let kinds = match (action.is_causal(), action.is_informational()) {
                    (true, true) => " (causal, informational)",
                    (true, false) => " (causal)",
                    (false, true) => " (informational)",
                    (false, false) => "",
                };
                println!("{}{}", report.render(&doc.propositions), if report.is_valid() { kinds } else { "" });
            }
            if !valid {
                return Err(Failure(1, "problem has invalid actions".into()));
            }
            doc.into_problem().map_err(|e| Failure(1, format!("{}: {e}", problem.display())))?;
            println!("problem: valid");
            Ok(())
        }
        Command::Plan { problem, threshold, max_refinements, max_action_copies } => {
            let mut problem = load_problem(&problem)?;
            if let Some(t) = threshold {
                problem = problem.with_threshold(t).map_err(|e| Failure(1, e.to_string()))?;
            }
            let config = SearchConfig { max_refinements, max_action_copies, ..SearchConfig::default() };
            match planner::plan(&problem, &config) {
                Ok(solution) => {
                    print!("{}", format_plan(&renumber(&solution.steps), Some(&solution.probability)));
                    eprintln!("expanded {} plans, generated {}", solution.stats.expanded, solution.stats.generated);
                    Ok(())
                }
                Err(failure) => {
                    if let Some((steps, p)) = &failure.best {
                        eprint!("best plan found:\n{}", format_plan(&renumber(steps), Some(p)));
                    }
                    Err(Failure(2, format!("planning failed: {failure}")))
                }
            }
        }
        Command::Assess { problem, plan } => {
            let problem = load_problem(&problem)?;
            let steps = load_plan(&plan, &problem)?;
            let p = goal_probability(&problem, &steps).map_err(|e| Failure(1, e.to_string()))?;
            println!("{:.6}", p.as_f64());
            Ok(())
        }
        Command::Simulate { problem, plan, samples, seed } => {
            let problem = load_problem(&problem)?;
            let steps = load_plan(&plan, &problem)?;
            let est = simulate(&problem, &steps, samples, seed).map_err(|e| Failure(1, e.to_string()))?;
            println!("estimate {:.6} stderr {:.6}", est.estimate, est.std_error);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
