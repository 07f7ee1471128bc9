//! Command-line front end for `beckmann-core`.
//!
//! Machine-readable reports go to standard output as JSON with sorted keys;
//! a short human summary goes to standard error. Exit codes: `0` success,
//! `2` usage or precondition errors, `1` internal errors and failed self-tests.

pub mod commands;
pub mod emit;
pub mod error;
pub mod instance;
pub mod json;
pub mod selftest;

use std::io::Write;
use std::path::PathBuf;

use beckmann_core::{NumericMode, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{Output, SolveFlags};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "beckmann", version, about = "Exact solvers for the discrete second-order Beckmann problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Rational,
    Float,
}

impl From<ModeArg> for NumericMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rational => NumericMode::Rational,
            ModeArg::Float => NumericMode::Float,
        }
    }
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Arithmetic; defaults to the file's `mode`, else rational up to 200 atoms.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide convex order, or convex-concave order when the instance gives v1 and v2.
    CheckOrder(InstanceArgs),
    /// Solve the three-marginal primal on a z grid and compare with the quadratic dual.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Grid JSON file (array of points, or {"grid": [...]}); replaces the generated grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Add the structured points, atoms and a bounding simplex to a given grid.
        #[arg(long)]
        enlarge: bool,
        /// Write the optimal plan as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the primal LP in plain-text LP format.
        #[arg(long)]
        lp_dump: Option<PathBuf>,
    },
    /// Build the leaf tree and solve every leaf.
    Decompose {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Write the partition tree as Graphviz DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Draw the grillage of the decomposed plan (planar instances only).
    Grillage {
        #[command(flatten)]
        instance: InstanceArgs,
        /// SVG output file.
        #[arg(long)]
        out: PathBuf,
        /// Write the bars as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Check the weak second divergence on monomials up to this degree.
        #[arg(long, default_value_t = 4)]
        verify_degree: usize,
    },
    /// Run the built-in worked examples.
    Selftest,
}

fn dispatch(command: Command) -> Result<Output, CliError> {
    macro_rules! by_mode {
        ($args:expr, |$inst:ident, $s:ident| $body:expr) => {{
            let $inst = commands::load_instance(&$args.instance)?;
            match $inst.resolve_mode($args.mode.map(NumericMode::from)) {
                NumericMode::Rational => {
                    type $s = Rational;
                    $body
                }
                NumericMode::Float => {
                    type $s = f64;
                    $body
                }
            }
        }};
    }
    match command {
        Command::CheckOrder(args) => by_mode!(args, |inst, S| commands::check_order::<S>(&inst)),
        Command::Solve { instance, grid, enlarge, csv, lp_dump } => {
            let flags = SolveFlags { grid, enlarge, csv, lp_dump };
            by_mode!(instance, |inst, S| commands::solve::<S>(&inst, &flags))
        }
        Command::Decompose { instance, dot } => by_mode!(instance, |inst, S| commands::decompose::<S>(&inst, dot.as_deref())),
        Command::Grillage { instance, out, csv, verify_degree } => {
            by_mode!(instance, |inst, S| commands::grillage::<S>(&inst, &out, csv.as_deref(), verify_degree))
        }
        Command::Selftest => selftest::run(),
    }
}

fn error_report(e: &CliError) -> serde_json::Value {
    serde_json::json!({"error": {
        "kind": e.kind(),
        "message": e.to_string(),
        "field": e.field_name(),
        "exit_code": e.exit_code(),
    }})
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stdout, "{text}");
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        2
                    } else {
                        0
                    }
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(out) => {
            let _ = stdout.write_all(json::render(&out.report).as_bytes());
            let _ = writeln!(stderr, "{}", out.summary);
            out.exit_code
        }
        Err(e) => {
            let _ = stdout.write_all(json::render(&error_report(&e)).as_bytes());
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
