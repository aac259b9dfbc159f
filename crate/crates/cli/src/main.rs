//! `wcprox`: check, compute and certify from JSON problem files.
//!
//! Exit status: 0 when every record HOLDS, 1 when any FAILS, 2 when any is
//! INCONCLUSIVE, 3 on usage or input errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wcprox::driver::{
    ippa_report, parse_json, run_experiment, CertifyKind, ConjugateProblem, CubeGrid, ExperimentConfig, IppaConfig, MembershipProblem, ProxProblem,
    Report, SumRuleProblem,
};
use wcprox::{Status, Tolerance, WcError};

#[derive(Parser, Debug)]
#[command(name = "wcprox", version, about = "Proximal ε-subdifferentials and inexact proximal points of weakly convex functions")]
struct Cli {
    /// Cube lattice `lo,hi,step` in the problem dimension, replacing any grid in the file.
    #[arg(long, global = true, value_parser = parse_grid, allow_hyphen_values = true)]
    grid: Option<CubeGrid>,
    /// Absolute tolerance of every check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Certificate {
    Type1,
    Type2,
    Chain,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Is v in the proximal ε-subdifferential ∂^ε_(γ,C) f(x0)?
    CheckMembership { file: PathBuf },
    /// ρ-conjugate values with the convexified-conjugate cross-check.
    Conjugate { file: PathBuf },
    /// Forward inclusion, decomposition or smooth shift for a sum f0 + f1.
    SumRule { file: PathBuf },
    /// Solve for an ε-proximal point and check it against the lattice.
    EpsProx { file: PathBuf },
    /// Type-1 / Type-2 certificates for a candidate ε-proximal point.
    Certify {
        #[arg(value_enum)]
        kind: Certificate,
        file: PathBuf,
    },
    /// Inexact proximal point run with per-step certificates.
    Ippa { file: PathBuf },
    /// Randomized property suites from an experiment configuration.
    Suite { file: PathBuf },
}

fn parse_grid(s: &str) -> Result<CubeGrid, String> {
    s.parse().map_err(|e: WcError| e.to_string())
}

/// A failure to produce a report, with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<WcError> for Failure {
    fn from(e: WcError) -> Self {
        let code = match e {
            WcError::Parse(_) | WcError::InvalidArgument(_) | WcError::DimensionMismatch { .. } | WcError::DimensionCap { .. } | WcError::Unsupported(_) => 3,
            WcError::Inconsistency(_) => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 3, message: format!("{}: {e}", path.display()) })
}

/// Reads and parses a problem file; input errors name the file.
fn load<T>(path: &Path, parse: fn(&str) -> wcprox::Result<T>) -> Result<T, Failure> {
    parse(&read(path)?).map_err(|e| Failure { code: 3, message: format!("{}: {e}", path.display()) })
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let tol = Tolerance::new(cli.tol, 0.0)?;
    let grid = cli.grid.as_ref();
    let report = match &cli.command {
        Command::CheckMembership { file } => load(file, parse_json::<MembershipProblem>)?.run(grid, &tol)?,
        Command::Conjugate { file } => load(file, parse_json::<ConjugateProblem>)?.run(grid, &tol)?,
        Command::SumRule { file } => load(file, parse_json::<SumRuleProblem>)?.run(grid, &tol)?,
        Command::EpsProx { file } => load(file, parse_json::<ProxProblem>)?.run_eps_prox(grid, &tol)?,
        Command::Certify { kind, file } => {
            let kind = match kind {
                Certificate::Type1 => CertifyKind::Type1,
                Certificate::Type2 => CertifyKind::Type2,
                Certificate::Chain => CertifyKind::Chain,
            };
            load(file, parse_json::<ProxProblem>)?.run_certify(kind, grid, &tol)?
        }
        Command::Ippa { file } => {
            let mut cfg = load(file, parse_json::<IppaConfig>)?;
            if let Some(g) = grid {
                cfg.grid = Some(g.domain(cfg.x0.dim())?);
            }
            ippa_report(&cfg, &tol)?
        }
        Command::Suite { file } => {
            let cfg = load(file, ExperimentConfig::from_json)?;
            run_experiment(&cfg, &tol, grid)?
        }
    };
    Ok(report)
}

fn render(report: &Report, format: Format) -> io::Result<Vec<u8>> {
    match format {
        Format::Json => Ok(report.to_json().into_bytes()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["case_id", "verdict", "margin", "witness", "reason"])?;
            for row in report.csv_rows() {
                w.write_record(&row)?;
            }
            w.into_inner().map_err(|e| e.into_error())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("wcprox: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let bytes = match render(&report, cli.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("wcprox: {e}");
            return ExitCode::from(3);
        }
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, &bytes),
        None => io::stdout().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("wcprox: {e}");
        return ExitCode::from(3);
    }
    ExitCode::from(match report.status() {
        Status::Holds => 0,
        Status::Fails => 1,
        Status::Inconclusive => 2,
    })
}
