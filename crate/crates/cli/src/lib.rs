//! `protomeas` command-line driver.
//!
//! Exit status: 0 on success, 2 when the command line, config or parameters
//! fail validation, 1 on runtime failure.

pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use config::{load_config, resolve_defaults, Experiment, Format, RunConfig};
use experiments::Context;
use output::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<protomeas::Error> for CliError {
    fn from(e: protomeas::Error) -> Self {
        use protomeas::Error as E;
        match e {
            // the remaining variants all describe unusable input
            E::GridEdge { .. } | E::Io(_) | E::Csv(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "protomeas",
    version,
    about = "Protective measurement, tomography, entropy and finite-ensemble experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run(RunArgs),
    /// List the experiments, their required parameters and schema files.
    List,
}

#[derive(Debug, Args)]
struct RunArgs {
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Collection size (ensemble).
    #[arg(long = "N")]
    n: Option<u64>,
    /// Monte Carlo trials (ensemble).
    #[arg(long)]
    trials: Option<usize>,
}

/// (name, required parameters, description); the schema file is
/// `schemas/<name>.schema.json`.
pub const EXPERIMENTS: [(Experiment, &str, &str); 7] = [
    (
        Experiment::Protective,
        "protection, observable, schedule.T",
        "protective measurement of one observable",
    ),
    (
        Experiment::Tomography,
        "source, rho | tomogram | state",
        "density-matrix reconstruction from expectation values",
    ),
    (
        Experiment::Entropy,
        "mode, rho | static, dims, state, schedule.T",
        "von Neumann entropy of a state or along an evolution",
    ),
    (
        Experiment::Ensemble,
        "(none; N, trials)",
        "total-spin fluctuations of the z- and x-prepared collections",
    ),
    (
        Experiment::BeamMerge,
        "(none)",
        "spin-path correlated beams versus their spin reductions",
    ),
    (
        Experiment::ErrorScaling,
        "protection, observable, T_factors | T_values",
        "protective error and disturbance along a T ladder",
    ),
    (
        Experiment::Frequency,
        "(none; weights, N_ladder, n_draws)",
        "memory of finite collections along a size ladder",
    ),
];

pub fn schema_file(e: Experiment) -> String {
    format!("schemas/{}.schema.json", e.name())
}

pub fn list_table() -> String {
    let mut out = format!(
        "{:<14} {:<34} {:<46} {}\n",
        "EXPERIMENT", "SCHEMA", "REQUIRED", "DESCRIPTION"
    );
    for (e, required, description) in EXPERIMENTS {
        out += &format!(
            "{:<14} {:<34} {:<46} {}\n",
            e.name(),
            schema_file(e),
            required,
            description
        );
    }
    out
}

fn execute(args: RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(e) = config.experiment {
        if e != args.experiment {
            return Err(CliError::Validation(format!(
                "experiment: config is for `{e}` but `{}` was requested",
                args.experiment
            )));
        }
    }
    let defaults = resolve_defaults(config.defaults.as_ref())?;
    protomeas::hilbert::set_max_dim(defaults.max_dim);

    let mut parameters = config
        .parameters
        .unwrap_or_else(|| Value::Object(Map::new()));
    let overrides = [
        ("N", args.n.map(Value::from)),
        ("trials", args.trials.map(Value::from)),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            match &mut parameters {
                Value::Object(m) => {
                    m.insert(key.into(), v);
                }
                _ => return Err(CliError::Validation("parameters: must be an object".into())),
            }
        }
    }

    let ctx = Context {
        experiment: args.experiment,
        seed: args.seed.or(config.seed).unwrap_or(0),
        defaults,
    };
    let artifact = experiments::run(&ctx, parameters)?;

    let out_path = args.out.or(config.output_path);
    let format = args
        .format
        .or(config.output_format)
        .or_else(|| {
            out_path
                .as_ref()
                .and_then(|p| p.extension())
                .filter(|x| x.eq_ignore_ascii_case("csv"))
                .map(|_| Format::Csv)
        })
        .unwrap_or(Format::Json);
    let bytes = artifact.render(format)?;
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    match out_path {
        Some(path) => {
            write_atomic(&path, &bytes)?;
            writeln!(stdout, "{} -> {}", artifact.summary, path.display()).map_err(io)?;
        }
        None => {
            stdout.write_all(&bytes).map_err(io)?;
            writeln!(stderr, "{}", artifact.summary).map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return e.exit_code();
        }
    };
    match cli.command {
        Command::List => match stdout.write_all(list_table().as_bytes()) {
            Ok(()) => 0,
            Err(_) => 1,
        },
        Command::Run(args) => match execute(args, stdout, stderr) {
            Ok(()) => 0,
            Err(e) => {
                let kind = match e {
                    CliError::Validation(_) => "invalid input",
                    CliError::Runtime(_) => "error",
                };
                let _ = writeln!(stderr, "protomeas: {kind}: {e}");
                e.exit_code()
            }
        },
    }
}
