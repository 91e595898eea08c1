//! `amput` — American put pricing on the binomial walk with a
//! finite-difference reference solver and convergence studies.

use std::path::PathBuf;
use std::process::ExitCode;

use amput::commands::{
    run_oracle, run_premium, run_price, run_study_boundary, run_study_converge,
    run_study_stopping, RunOutput,
};
use amput_core::lattice::LatticeScheme;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "amput",
    about = "American put pricing: binomial walk, variational-inequality oracle, premium quadrature, and convergence studies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Additive +/-1 walk.
    Paper,
    /// Risk-neutral multiplicative tree.
    Rn,
}

impl From<SchemeArg> for LatticeScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Paper => LatticeScheme::PaperWalk,
            SchemeArg::Rn => LatticeScheme::RiskNeutral,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Price the American put on the lattice.
    Price {
        /// Model JSON file with keys r, d, sigma, s0, k, t.
        #[arg(long)]
        model: PathBuf,
        /// Number of periods.
        #[arg(long)]
        n: usize,
        /// Discretisation scheme.
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Write the exercise boundary as CSV (step,t_years,x_walk,stock_price).
        #[arg(long)]
        boundary_out: Option<PathBuf>,
    },
    /// Solve the variational inequality on a finite-difference grid.
    Oracle {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Space intervals.
        #[arg(long)]
        m: usize,
        /// Time layers.
        #[arg(long)]
        nt: usize,
        /// Write the value surface as CSV (time_to_maturity,x,value).
        #[arg(long)]
        surface_out: Option<PathBuf>,
        /// Write the boundary as CSV (time_to_maturity,btilde_log,b_stock).
        #[arg(long)]
        boundary_out: Option<PathBuf>,
    },
    /// Early-exercise premium from an oracle boundary CSV.
    Premium {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Boundary CSV produced by `oracle --boundary-out`.
        #[arg(long)]
        boundary: PathBuf,
        /// Quadrature panels (default 64).
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Convergence, stopping-rule, and boundary studies.
    Study {
        #[command(subcommand)]
        what: StudyCommand,
    },
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Lattice error against the certified reference across a schedule.
    Converge {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Output directory for convergence.{csv,json,svg}.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated period counts (default "128,256,...,16384").
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Barrier stopping rule values, gaps, and tail bounds.
    Stopping {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Output directory for stopping.{csv,json}.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated period counts (default "128,...,8192").
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Near-maturity boundary asymptotics fit.
    Boundary {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Output directory for boundary.csv and boundary_fit.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price { model, n, scheme, boundary_out } => {
            run_price(&model, n, scheme.into(), boundary_out.as_deref())
        }
        Command::Oracle { model, m, nt, surface_out, boundary_out } => {
            run_oracle(&model, m, nt, surface_out.as_deref(), boundary_out.as_deref())
        }
        Command::Premium { model, boundary, resolution } => {
            run_premium(&model, &boundary, resolution)
        }
        Command::Study { what } => match what {
            StudyCommand::Converge { model, out, schedule } => {
                run_study_converge(&model, &out, schedule.as_deref())
            }
            StudyCommand::Stopping { model, out, schedule } => {
                run_study_stopping(&model, &out, schedule.as_deref())
            }
            StudyCommand::Boundary { model, out } => run_study_boundary(&model, &out),
        },
    };
    match result {
        Ok(RunOutput { stdout, failures }) => {
            print!("{stdout}");
            if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
