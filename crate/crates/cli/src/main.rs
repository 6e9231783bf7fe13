use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cotransport::commands::{cmd_plan, cmd_render, cmd_simulate, cmd_validate, Overrides, EXIT_ERROR, EXIT_OK};

/// Plan and simulate multi-agent transportation tasks under LTL goals.
#[derive(Debug, Parser)]
#[command(name = "cotransport", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file and list every problem found.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Synthesize a plan satisfying the scenario's formulas.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        /// plan file to write; printed when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a plan: the prefix followed by `--rounds` cycles.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// cycle repetitions after the prefix
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// integration step in seconds, overriding the scenario
        #[arg(long)]
        dt: Option<f64>,
        /// seed for saddle escapes, overriding the scenario
        #[arg(long)]
        seed: Option<u64>,
        /// directory for trajectory.csv and summary.txt
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Draw a trajectory CSV over the scenario's workspace as SVG.
    Render {
        /// trajectory CSV written by `simulate`
        trajectory: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "trajectory.svg")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    // usage errors exit with 1; clap's own code 2 means "unsatisfiable" here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR as u8) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Plan { scenario, out } => cmd_plan(scenario, out.as_deref()),
        Command::Simulate { scenario, plan, rounds, dt, seed, out } => {
            cmd_simulate(scenario, plan, *rounds, Overrides { dt: *dt, seed: *seed }, out)
        }
        Command::Render { trajectory, scenario, out } => cmd_render(trajectory, scenario, out),
    };
    if outcome.code == EXIT_OK {
        println!("{}", outcome.message.trim_end());
    } else {
        eprintln!("{}", outcome.message.trim_end());
    }
    ExitCode::from(outcome.code as u8)
}
