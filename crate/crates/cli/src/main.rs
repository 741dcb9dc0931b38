use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use thomson5_cli::commands::{
    run_analyze, run_generate, run_scan, run_solve, AnalyzeArgs, GenerateArgs, ScanArgs, SolveArgs,
};
use thomson5_cli::CliError;

/// Critical configurations of five point charges on the unit sphere:
/// Newton solving, eigen-analysis, s-sweeps and family generation.
#[derive(Parser)]
#[command(name = "thomson5", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Newton solves from seeded random starts (or family
    /// perturbations) and tally the families found.
    Solve {
        /// Riesz exponent (s = 1 is the Coulomb case).
        #[arg(long)]
        s: f64,
        /// Number of solves.
        #[arg(long)]
        starts: usize,
        /// RNG seed; one counter-addressed stream per run.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturb a named family instead of sampling uniformly:
        /// `--perturb <FAMILY> <EPS>`.
        #[arg(long, num_args = 2, value_names = ["FAMILY", "EPS"])]
        perturb: Option<Vec<String>>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigen-classify one critical configuration.
    Analyze {
        #[arg(long)]
        s: f64,
        /// A configuration file, or a family spec like `bipyramid:0.3`,
        /// `pyramid:auto`, `pentagon:0`, `doubletetra:auto`.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the Riesz exponent, exporting branch data as CSV and detected
    /// bifurcations as JSON.
    Scan {
        #[arg(long)]
        s_min: f64,
        #[arg(long)]
        s_max: f64,
        #[arg(long)]
        step: f64,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Write the bifurcation-record JSON here instead of stdout.
        #[arg(long)]
        records_out: Option<PathBuf>,
    },
    /// Write a family configuration to a JSON file.
    Generate {
        /// Family spec, e.g. `bipyramid:0`, `pyramid:auto`, `pentagon:1.57`.
        #[arg(long)]
        family: String,
        /// Riesz exponent used to resolve `auto` shape parameters.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(CliError::Io),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(CliError::Io)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            s,
            starts,
            seed,
            perturb,
            out,
        } => {
            let perturb = match perturb {
                Some(pair) => {
                    let eps = pair[1].parse::<f64>().map_err(|_| {
                        CliError::Usage(format!("cannot parse perturbation size '{}'", pair[1]))
                    })?;
                    Some((pair[0].clone(), eps))
                }
                None => None,
            };
            let report = run_solve(&SolveArgs {
                s,
                starts,
                seed,
                perturb,
            })?;
            emit(&report, out.as_ref())
        }
        Command::Analyze { s, config, out } => {
            let report = run_analyze(&AnalyzeArgs { s, config })?;
            emit(&report, out.as_ref())
        }
        Command::Scan {
            s_min,
            s_max,
            step,
            out,
            records_out,
        } => {
            let (csv, json) = run_scan(&ScanArgs { s_min, s_max, step })?;
            std::fs::write(&out, csv).map_err(CliError::Io)?;
            emit(&json, records_out.as_ref())
        }
        Command::Generate { family, s, out } => {
            let config = run_generate(&GenerateArgs { family, s })?;
            std::fs::write(&out, config).map_err(CliError::Io)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("thomson5: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
