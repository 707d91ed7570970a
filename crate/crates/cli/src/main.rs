use std::path::PathBuf;
use std::process::ExitCode;

use ablkit::ConsistencyCriterion;
use ablkit_cli::commands::{
    cmd_abl, cmd_consistency, cmd_counterexample, cmd_emit, cmd_mixing, cmd_simulate,
    cmd_validate, ConsistencyOptions, CounterexampleOptions, SimulateOptions,
};
use ablkit_cli::{CliError, Report, Source};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ablkit", version, about = "Pre- and postselected measurement probabilities")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Scenario file (JSON).
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Built-in scenario: three-box, spin-pi3, spin:<radians>, preselect-only,
    /// identity-A, identity-B.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
}

impl SourceArgs {
    fn source(&self) -> Source {
        match (&self.scenario, &self.builtin) {
            (Some(path), _) => Source::File(path.clone()),
            (None, Some(name)) => Source::Builtin(name.clone()),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ABL distribution of an intermediate measurement.
    Abl {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        observable: String,
    },
    /// Decoherence functional and consistency of (P_a, {P_c}, P_b).
    Consistency {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        observable: String,
        /// Threshold on off-diagonal entries and on the postselection gap.
        #[arg(long, default_value_t = ablkit::EPS_CONS)]
        tolerance: f64,
        /// Only require the real parts of off-diagonal entries to vanish.
        #[arg(long)]
        weak: bool,
        /// Also check every coarse-graining of the observable.
        #[arg(long)]
        coarse_grainings: bool,
    },
    /// Monte Carlo estimate of the ABL distribution.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        /// Intermediate observable; omit to simulate without a measurement.
        #[arg(long)]
        observable: Option<String>,
        #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Worker threads (results do not depend on this).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
    },
    /// Search for a violation of the undisturbed weighted-sum identity.
    Counterexample {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=6))]
        dim: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = ablkit::counterfactual::DEFAULT_GAP_MIN)]
        gap_min: f64,
        #[arg(long, default_value_t = 1000)]
        max_tries: u64,
        /// Also report the hit rate over all attempts.
        #[arg(long)]
        survey: bool,
    },
    /// Weighted sums of ABL conditionals over a final basis.
    Mixing {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        observable: String,
        /// Observable whose eigenspaces are the possible final outcomes.
        #[arg(long)]
        final_basis: String,
        #[arg(long, default_value_t = 0)]
        branch: usize,
    },
    /// Scenario file utilities.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand, Debug)]
enum ScenarioAction {
    /// Check a scenario and summarize it.
    Validate {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Print a scenario in canonical form.
    Emit {
        #[command(flatten)]
        source: SourceArgs,
    },
}

enum Output {
    Report(Box<Report>),
    Text(String),
}

fn run(cli: Cli, echo: Vec<String>) -> Result<Output, CliError> {
    let report = match cli.command {
        Command::Abl { source, observable } => cmd_abl(&source.source(), &observable, echo)?,
        Command::Consistency {
            source,
            observable,
            tolerance,
            weak,
            coarse_grainings,
        } => {
            let options = ConsistencyOptions {
                tolerance,
                criterion: if weak {
                    ConsistencyCriterion::Weak
                } else {
                    ConsistencyCriterion::Medium
                },
                coarse_grainings,
            };
            cmd_consistency(&source.source(), &observable, &options, echo)?
        }
        Command::Simulate {
            source,
            observable,
            trials,
            seed,
            workers,
        } => {
            let options = SimulateOptions {
                observable,
                trials,
                seed,
                workers: workers.map(|w| w as usize),
            };
            cmd_simulate(&source.source(), &options, echo)?
        }
        Command::Counterexample {
            dim,
            seed,
            gap_min,
            max_tries,
            survey,
        } => {
            let options = CounterexampleOptions {
                dim: dim as usize,
                seed,
                gap_min,
                max_tries,
                survey,
            };
            cmd_counterexample(&options, echo)?
        }
        Command::Mixing {
            source,
            observable,
            final_basis,
            branch,
        } => cmd_mixing(&source.source(), &observable, &final_basis, branch, echo)?,
        Command::Scenario { action } => match action {
            ScenarioAction::Validate { source } => cmd_validate(&source.source(), echo)?,
            ScenarioAction::Emit { source } => return Ok(Output::Text(cmd_emit(&source.source())?)),
        },
    };
    Ok(Output::Report(Box::new(report)))
}

fn main() -> ExitCode {
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let json = cli.json;
    match run(cli, echo) {
        Ok(Output::Report(r)) => {
            if json {
                println!("{}", r.to_json());
            } else {
                print!("{}", r.to_text());
            }
            ExitCode::SUCCESS
        }
        Ok(Output::Text(t)) => {
            print!("{t}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
