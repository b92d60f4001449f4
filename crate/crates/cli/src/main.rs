//! `kantorovich`: solve a problem file and emit a certificate report.

mod commands;
mod problem;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Failure, Settings};
use problem::ProblemFile;
use report::{Report, Timing, EXIT_INPUT};

#[derive(Parser, Debug)]
#[command(name = "kantorovich", version, about = "Certified solvers for Kantorovich operators")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand, Debug)]
enum Action {
    /// Run a command on a problem file.
    Run(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Mather,
    Weakkam,
    Transfer,
    Sinkhorn,
    Schrodinger,
    Ergopt,
    Axioms,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    command: Command,
    /// Problem file (JSON).
    problem: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Horizon N for the finite-n diagnostics.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Samples per operator in the axiom suite.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Include wall-clock time (makes the report non-deterministic).
    #[arg(long)]
    timing: bool,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Mather => "mather",
            Command::Weakkam => "weakkam",
            Command::Transfer => "transfer",
            Command::Sinkhorn => "sinkhorn",
            Command::Schrodinger => "schrodinger",
            Command::Ergopt => "ergopt",
            Command::Axioms => "axioms",
        }
    }
}

fn main() -> ExitCode {
    let Action::Run(args) = Cli::parse().action;
    ExitCode::from(run(&args) as u8)
}

fn run(args: &RunArgs) -> i32 {
    let text = match fs::read_to_string(&args.problem) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.problem.display());
            return EXIT_INPUT;
        }
    };
    let problem = match ProblemFile::parse(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: invalid problem file: {e}");
            return EXIT_INPUT;
        }
    };
    let settings = Settings {
        tol: args.tol.or(problem.options.tol).unwrap_or(1e-9),
        max_iter: args.max_iter.or(problem.options.max_iter).unwrap_or(1_000_000),
        seed: args.seed.or(problem.options.seed).unwrap_or(0),
        steps: args.steps,
        trials: args.trials,
    };
    if !(settings.tol > 0.0) {
        eprintln!("error: invalid flag: --tol must be positive");
        return EXIT_INPUT;
    }

    let start = Instant::now();
    let outcome = match args.command {
        Command::Mather => commands::mather(&problem, &settings),
        Command::Weakkam => commands::weakkam(&problem, &settings),
        Command::Transfer => commands::transfer(&problem, &settings),
        Command::Sinkhorn => commands::sinkhorn(&problem, &settings),
        Command::Schrodinger => commands::schrodinger(&problem, &settings),
        Command::Ergopt => commands::ergopt(&problem, &settings),
        Command::Axioms => commands::axioms(&problem, &settings),
    };
    let timing = args.timing.then(|| Timing { wall_seconds: start.elapsed().as_secs_f64() });

    let (results, certificates, failure) = match outcome {
        Ok((r, c)) => (r, c, None),
        Err(Failure::Input(e)) => {
            eprintln!("error: invalid problem file: {e}");
            return EXIT_INPUT;
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: numerical failure: {e}");
            (serde_json::Value::Null, Default::default(), Some(report::Failure::from_error(&e)))
        }
    };
    let report = Report {
        command: args.command.name().to_string(),
        input_digest: problem.digest(),
        results,
        certificates,
        failure,
        timing,
    };
    let body = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => print!("{body}"),
    }
    report.exit_code()
}
