//! `oilpore`: command-line pipelines over the pore-flow toolkit.
//!
//! Subcommands: `generate`, `train`, `evaluate`, `bench`, `sensitivity`,
//! `ablate`. Every run reads a sectioned `key = value` config (or JSON of
//! the same shape), writes its artifacts into `--out`, and finishes by
//! writing `run_manifest.txt` as the success marker.

mod args;
mod commands;
mod configio;
mod runmeta;

use args::CliArgs;

const USAGE: &str = "usage: oilpore <generate|train|evaluate|bench|sensitivity|ablate>
           [--config PATH] [--out DIR] [--seed N] [--threads N]
           [--model PATH] [--data DIR] [--data-noobs DIR] [--flags LIST]";

fn main() {
    let code = dispatch(std::env::args().skip(1).collect());
    std::process::exit(code);
}

fn dispatch(argv: Vec<String>) -> i32 {
    let args = match CliArgs::parse(argv) {
        Ok(args) => args,
        Err(msg) => {
            eprintln!("error[usage]: {msg}");
            eprintln!("{USAGE}");
            return 2;
        }
    };
    let threads = args.threads.unwrap_or(0);
    let result = oilpore_core::par::with_threads(threads, || run_command(&args));
    match result {
        Ok(()) => 0,
        Err(err) => {
            let (category, code) = err.category();
            eprintln!("error[{category}]: {err}");
            code
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Pipeline(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Pipeline(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn category(&self) -> (&'static str, i32) {
        match self {
            CliError::Usage(_) => ("usage", 2),
            CliError::Config(_) => ("config", 2),
            CliError::Pipeline(_) => ("pipeline", 1),
        }
    }
}

impl From<oilpore_core::CoreError> for CliError {
    fn from(e: oilpore_core::CoreError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<oilpore_data::DataError> for CliError {
    fn from(e: oilpore_data::DataError) -> Self {
        match e {
            oilpore_data::DataError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

impl From<oilpore_solver::SolverError> for CliError {
    fn from(e: oilpore_solver::SolverError) -> Self {
        match e {
            oilpore_solver::SolverError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

impl From<oilpore_surrogate::ModelError> for CliError {
    fn from(e: oilpore_surrogate::ModelError) -> Self {
        match e {
            oilpore_surrogate::ModelError::Config(_)
            | oilpore_surrogate::ModelError::Dimension(_) => CliError::Config(e.to_string()),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

impl From<oilpore_train::TrainError> for CliError {
    fn from(e: oilpore_train::TrainError) -> Self {
        match e {
            oilpore_train::TrainError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

impl From<oilpore_eval::EvalError> for CliError {
    fn from(e: oilpore_eval::EvalError) -> Self {
        match e {
            oilpore_eval::EvalError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Pipeline(format!("io: {e}"))
    }
}

fn run_command(args: &CliArgs) -> Result<(), CliError> {
    match args.command.as_str() {
        "generate" => commands::generate(args),
        "train" => commands::train(args),
        "evaluate" => commands::evaluate(args),
        "bench" => commands::bench(args),
        "sensitivity" => commands::sensitivity(args),
        "ablate" => commands::ablate(args),
        other => Err(CliError::Usage(format!("unknown subcommand '{other}'"))),
    }
}
