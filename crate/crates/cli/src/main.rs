use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ttcc::calculus::AskPolicy;
use ttcc::constraint::DEFAULT_MAX;
use ttcc::validators::WfMode;
use ttcc_cli::{cmd_check, cmd_replay, cmd_run, cmd_validate, Outcome, RunConfig};

#[derive(Parser)]
#[command(name = "ttcc", version, about = "Timed concurrent constraint programs and avionics schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and check declarations, arity and guarded recursion.
    Check { file: PathBuf },
    /// Check CF, WF, SR and LT on a system configuration.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Simulate a program or a system configuration.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        ticks: u64,
        /// Inputs, one `tick: constraint` per line.
        #[arg(long)]
        env: Option<PathBuf>,
        /// Write the trace here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep simulating after an inconsistent time unit.
        #[arg(long)]
        keep_going: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Re-check a trace with the reference entailment oracle.
    Replay {
        trace: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX)]
        max: i64,
    },
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, default_value = "eager")]
    ask_policy: AskPolicy,
    #[arg(long, default_value = "modular")]
    wf: WfMode,
    /// Variables range over 0..max.
    #[arg(long, default_value_t = DEFAULT_MAX)]
    max: i64,
    /// Micro steps allowed per time unit.
    #[arg(long, default_value_t = 1_000_000)]
    step_budget: u64,
}

impl EngineArgs {
    fn config(&self, ticks: u64, env: Option<PathBuf>, out: Option<PathBuf>, keep_going: bool) -> RunConfig {
        RunConfig {
            ticks,
            env,
            ask_policy: self.ask_policy,
            wf_mode: self.wf,
            max: self.max,
            step_budget: self.step_budget,
            out,
            keep_going,
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Check { file } => cmd_check(&file),
        Command::Validate { file, engine } => {
            let config = engine.config(1, None, None, false);
            cmd_validate(&file, config.wf_mode, config.engine()?)
        }
        Command::Run { file, ticks, env, out, keep_going, engine } => {
            cmd_run(&file, &engine.config(ticks, env, out, keep_going))
        }
        Command::Replay { trace, max } => cmd_replay(&trace, max),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            eprint!("{}", outcome.stderr);
            let _ = std::io::stdout().flush();
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
