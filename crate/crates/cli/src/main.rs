//! `nullweak`: run weak-measurement scenarios and print result tables.
//!
//! Exit codes: 0 on success, 2 on parse/validation failures, 3 when the
//! engine fails on every requested row (or a solver finds no solution).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nullweak_core::runner::{
    builtin_scenario, emit_scenario, load_scenario, rows_to_csv, rows_to_json, run_scenario,
    Coupling, RunFlags,
};
use nullweak_core::setups::{solve_postselection, solve_unit_weak_values};
use nullweak_core::{Error, Mode, Scenario};

const EXIT_PARSE: u8 = 2;
const EXIT_ENGINE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nullweak",
    version,
    about = "Weak-value and pointer-coupled interferometer simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every probe of a scenario and emit a result table.
    Run(RunArgs),
    /// Write a loaded scenario back out in explicit file form.
    Emit(EmitArgs),
    /// Solve for the three-path interferometer angles.
    SolveAngles(SolveArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(conflicts_with = "builtin")]
    file: Option<PathBuf>,
    /// Builtin scenario name: three-path | nested-mzi.
    #[arg(long)]
    builtin: Option<String>,
    /// Weak values from the transition-amplitude formula, no pointer.
    #[arg(long)]
    analytic: bool,
    /// Coupled-run mode; weak and strong gate the size of g.
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Override every probe's coupling strength.
    #[arg(long, conflicts_with = "sweep")]
    g: Option<f64>,
    /// Log-spaced coupling sweep: MIN MAX N.
    #[arg(long, num_args = 3, value_names = ["MIN", "MAX", "N"])]
    sweep: Option<Vec<String>>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputArg::Csv)]
    output: OutputArg,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    /// Scenario file (JSON).
    #[arg(conflicts_with = "builtin")]
    file: Option<PathBuf>,
    /// Builtin scenario name: three-path | nested-mzi.
    #[arg(long)]
    builtin: Option<String>,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Solve the two-condition system fixing both angles (the default).
    #[arg(long)]
    unit_weak_values: bool,
    /// Solve only the postselection condition at this splitting angle.
    #[arg(long, conflicts_with = "unit_weak_values")]
    alpha: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Weak,
    Strong,
    Exact,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Weak => Mode::Weak,
            ModeArg::Strong => Mode::Strong,
            ModeArg::Exact => Mode::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Csv,
    Json,
}

fn load(file: &Option<PathBuf>, builtin: &Option<String>) -> Result<Scenario, Error> {
    match (file, builtin) {
        (Some(path), None) => load_scenario(path),
        (None, Some(name)) => builtin_scenario(name),
        _ => Err(Error::Parse {
            key: "arguments".into(),
            reason: "give exactly one of a scenario file or --builtin NAME".into(),
        }),
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_command(args: &RunArgs) -> Result<u8, Error> {
    let scenario = load(&args.file, &args.builtin)?;
    let coupling = if let Some(sweep) = &args.sweep {
        let parse = |s: &str, what: &str| -> Result<f64, Error> {
            s.parse().map_err(|_| Error::Parse {
                key: "--sweep".into(),
                reason: format!("{what} '{s}' is not a number"),
            })
        };
        let n: usize = sweep[2].parse().map_err(|_| Error::Parse {
            key: "--sweep".into(),
            reason: format!("count '{}' is not an integer", sweep[2]),
        })?;
        Coupling::Sweep {
            min: parse(&sweep[0], "min")?,
            max: parse(&sweep[1], "max")?,
            n,
        }
    } else if let Some(g) = args.g {
        Coupling::Fixed(g)
    } else {
        Coupling::PerProbe
    };
    let flags = RunFlags {
        analytic: args.analytic,
        mode: args.mode.into(),
        coupling,
    };
    let (rows, errors) = run_scenario(&scenario, &flags)?;
    for e in &errors {
        eprintln!("probe {} (g = {}): {}", e.probe, e.g, e.error);
    }
    let text = match args.output {
        OutputArg::Csv => rows_to_csv(&rows),
        OutputArg::Json => rows_to_json(scenario.name(), &rows, &errors),
    };
    write_out(&args.out, &text)?;
    if rows.is_empty() && !errors.is_empty() {
        return Ok(EXIT_ENGINE);
    }
    Ok(0)
}

fn emit_command(args: &EmitArgs) -> Result<u8, Error> {
    let scenario = load(&args.file, &args.builtin)?;
    let file = emit_scenario(&scenario);
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse {
        key: "emit".into(),
        reason: e.to_string(),
    })?;
    text.push('\n');
    write_out(&args.out, &text)?;
    Ok(0)
}

fn solve_command(args: &SolveArgs) -> Result<u8, Error> {
    let (alpha, phi) = match args.alpha {
        Some(alpha) => (alpha, solve_postselection(alpha)?),
        None => solve_unit_weak_values()?,
    };
    println!("alpha = {alpha:.11e}");
    println!("phi = {phi:.11e}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Emit(args) => emit_command(args),
        Command::SolveAngles(args) => solve_command(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parse { .. } | Error::Validation { .. } | Error::Io(_) => EXIT_PARSE,
                _ => EXIT_ENGINE,
            };
            ExitCode::from(code)
        }
    }
}
