mod commands;
mod output;
mod system;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ChartChoice, CliError, Method, Settings, Span};

#[derive(Parser)]
#[command(name = "solvstruct", version, about = "Solvable structures for integrable Hamiltonian systems")]
struct Cli {
    /// Number of sample points (default 200 for verify, 60 for chart fitting)
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Random seed for sampling
    #[arg(long, global = true, env = "SOLVSTRUCT_SEED", default_value_t = 42)]
    seed: u64,
    /// Residual tolerance
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Write the result here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and verify the canonical solvable structure
    Verify {
        /// `ho:n=…,m=…,c=…`, `cm2:g=…` or a system file
        system: String,
    },
    /// Integrate Hamilton's equations and print a CSV trajectory
    Integrate {
        system: String,
        /// Initial state q1..qn,p1..pn
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, value_enum, default_value_t = Method::Rk4)]
        method: Method,
        /// Chart for the quadrature method
        #[arg(long, value_enum, default_value_t = ChartChoice::Auto)]
        chart: ChartChoice,
    },
    /// Extract action-angle variables and check canonicity
    ActionAngle {
        system: String,
        #[arg(long, value_enum, default_value_t = ChartChoice::Auto)]
        chart: ChartChoice,
    },
    /// Compute the Pfaffian forms, their closure and the quadrature descent
    Pfaffian {
        system: String,
        #[arg(long, value_enum, default_value_t = ChartChoice::Auto)]
        chart: ChartChoice,
    },
    /// Print the system definition as a JSON system file
    Export { system: String },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let settings = Settings { samples: cli.samples, seed: cli.seed, tol: cli.tol };
    if !(cli.tol > 0.0) {
        return Err(CliError::Input(anyhow::anyhow!("--tol: must be positive")));
    }
    let load = |r: &str| system::load(r).map_err(CliError::Input);
    let outcome = match &cli.command {
        Command::Verify { system } => commands::verify(&load(system)?, &settings)?,
        Command::Integrate { system, x0, t0, t1, step, method, chart } => {
            let span = Span { x0: x0.clone(), t0: *t0, t1: *t1, step: *step };
            commands::integrate(&load(system)?, *method, &span, *chart, &settings)?
        }
        Command::ActionAngle { system, chart } => commands::action_angle(&load(system)?, *chart, &settings)?,
        Command::Pfaffian { system, chart } => commands::pfaffian(&load(system)?, *chart, &settings)?,
        Command::Export { system } => commands::export(&load(system)?)?,
    };
    output::emit(cli.output.as_deref(), &outcome.text).map_err(CliError::Failure)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code() as u8)
        }
    }
}
