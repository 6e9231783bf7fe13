//! The validate, plan, simulate and render pipelines behind the command line.
//! Each command returns an exit code and the text to print.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::executor::{execute, Execution, Trajectory};
use crate::ltl::{synthesize, Plan};
use crate::planfile::PlanFile;
use crate::report::{read_csv, render_svg, round_summary, write_csv};
use crate::scenario::{Scenario, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSATISFIABLE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_ROUND_FAILURE: i32 = 4;

/// Name of the trajectory file written by `simulate` into its output directory.
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub message: String,
}

impl Outcome {
    fn ok(message: impl Into<String>) -> Self {
        Self { code: EXIT_OK, message: message.into() }
    }

    fn error(e: &Error) -> Self {
        let code = match e {
            Error::RoundFailure { .. } => EXIT_ROUND_FAILURE,
            _ => EXIT_ERROR,
        };
        Self { code, message: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Executor settings that override the scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub seed: Option<u64>,
}

/// Loads and validates a scenario. An unreadable file is an ordinary error;
/// a file that does not parse or validate lists every problem found.
pub fn load_scenario(path: &Path, overrides: Overrides) -> std::result::Result<Scenario, Outcome> {
    let text = read(path).map_err(|e| Outcome::error(&e))?;
    let mut file = ScenarioFile::parse(&text).map_err(|e| invalid(path, vec![e.to_string()]))?;
    if let Some(dt) = overrides.dt {
        file.execution.dt = dt;
    }
    if let Some(seed) = overrides.seed {
        file.execution.seed = seed;
    }
    let violations = file.check();
    if !violations.is_empty() {
        return Err(invalid(path, violations.iter().map(|v| v.to_string()).collect()));
    }
    Scenario::from_file(file).map_err(|e| invalid(path, vec![e.to_string()]))
}

fn invalid(path: &Path, problems: Vec<String>) -> Outcome {
    let mut message = format!("{}: {} problem(s)", path.display(), problems.len());
    for p in problems {
        message.push_str("\n  ");
        message.push_str(&p);
    }
    Outcome { code: EXIT_INVALID, message }
}

pub fn cmd_validate(scenario: &Path) -> Outcome {
    match load_scenario(scenario, Overrides::default()) {
        Ok(s) => Outcome::ok(format!(
            "{}: valid ({} agents, {} objects, {} regions, initial state {})",
            scenario.display(),
            s.file.agents.len(),
            s.file.objects.len(),
            s.file.regions.len(),
            s.initial_discrete
        )),
        Err(o) => o,
    }
}

/// Synthesizes a plan; `None` when no run satisfies the formula.
pub fn plan_scenario(scenario: &Scenario) -> Result<Option<Plan>> {
    synthesize(&scenario.transition_system()?, &scenario.global_formula())
}

/// Writes the plan file to `out`, or returns it as the message without `out`.
pub fn cmd_plan(scenario: &Path, out: Option<&Path>) -> Outcome {
    let s = match load_scenario(scenario, Overrides::default()) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let run = || -> Result<Option<String>> {
        let Some(plan) = plan_scenario(&s)? else { return Ok(None) };
        Ok(Some(PlanFile::from_plan(&plan, &s).to_toml()?))
    };
    match run() {
        Ok(None) => Outcome {
            code: EXIT_UNSATISFIABLE,
            message: format!("unsatisfiable: no run of the system satisfies {}", s.global_formula()),
        },
        Ok(Some(text)) => match out {
            None => Outcome::ok(text),
            Some(path) => match write(path, text.as_bytes()) {
                Ok(()) => Outcome::ok(format!("plan written to {}", path.display())),
                Err(e) => Outcome::error(&e),
            },
        },
        Err(e) => Outcome::error(&e),
    }
}

/// Runs the prefix and `rounds` cycles of `plan`, sampling the trajectory.
pub fn simulate(scenario: &Scenario, plan: &Plan, rounds: usize) -> Result<(Execution, Trajectory)> {
    let mut trace = Trajectory::default();
    let execution = execute(&scenario.env, plan, &scenario.initial, rounds, Some(&mut trace))?;
    Ok((execution, trace))
}

/// Writes the trajectory CSV and round summary into the directory `out`.
pub fn cmd_simulate(scenario: &Path, plan: &Path, rounds: usize, overrides: Overrides, out: &Path) -> Outcome {
    let s = match load_scenario(scenario, overrides) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let run = || -> Result<(String, Option<Error>)> {
        let plan = PlanFile::parse(&read(plan)?)?.load(&s)?;
        let (execution, trace) = simulate(&s, &plan, rounds)?;
        fs::create_dir_all(out).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out.display())))?;
        let mut csv = Vec::new();
        write_csv(&trace, &mut csv)?;
        write(&out.join(TRAJECTORY_FILE), &csv)?;
        let summary = round_summary(&plan, &execution);
        write(&out.join(SUMMARY_FILE), summary.as_bytes())?;
        Ok((summary, execution.failure))
    };
    match run() {
        Ok((summary, None)) => Outcome::ok(summary),
        Ok((summary, Some(e))) => Outcome { code: EXIT_ROUND_FAILURE, message: format!("{summary}{e}") },
        Err(e) => Outcome::error(&e),
    }
}

pub fn cmd_render(trajectory: &Path, scenario: &Path, out: &Path) -> Outcome {
    let s = match load_scenario(scenario, Overrides::default()) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let run = || -> Result<usize> {
        let trace = read_csv(read(trajectory)?.as_bytes())?;
        if trace.rows.is_empty() {
            return Err(Error::InvalidInput(format!("{} has no samples", trajectory.display())));
        }
        let svg = render_svg(&trace, &s.env.workspace);
        write(out, svg.as_bytes())?;
        Ok(trace.rows.len())
    };
    match run() {
        Ok(n) => Outcome::ok(format!("rendered {n} samples to {}", out.display())),
        Err(e) => Outcome::error(&e),
    }
}
