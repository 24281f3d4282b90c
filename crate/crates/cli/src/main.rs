use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcyamabe::audit::{emit, run_suite, Format, Suite, SuiteConfig};
use qcyamabe::quadrature::write_convergence_csv;
use qcyamabe::Exec;

#[derive(Parser)]
#[command(name = "qcyamabe", version, about = "Verification suites for the qc Yamabe problem on the quaternionic Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Seed of every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of points for every sampled check.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    /// Tolerance for every accuracy check; controls keep their thresholds.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run the suites of `all` concurrently.
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Frame commutators, Hessian antisymmetry, jets against finite differences.
    VerifyFrames,
    /// Conformal deformation identities and the qc-Einstein family.
    VerifyConformal,
    /// Yamabe equation for the extremal and its translates and dilates.
    VerifyExtremal,
    /// Cayley transform, the inversion and the Kelvin transform.
    VerifyCayley,
    /// Best-constant integral, Monte Carlo cross-check and reconciliation table.
    BestConstant {
        /// Write the refinement history of the cubature as CSV.
        #[arg(long)]
        convergence_csv: Option<PathBuf>,
    },
    /// Spectrum and quadratic form of the 6x6 matrix.
    Qmatrix,
    /// Folland–Stein quotient invariance and minimisation.
    QuotientMin,
    /// Every suite.
    All,
}

fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    fs::File::create(path)?.write_all(text.as_bytes())
}

fn run(cli: Cli) -> Result<bool, String> {
    let (suite, csv_path) = match cli.command {
        Command::VerifyFrames => (Suite::Frames, None),
        Command::VerifyConformal => (Suite::Conformal, None),
        Command::VerifyExtremal => (Suite::Extremal, None),
        Command::VerifyCayley => (Suite::Cayley, None),
        Command::BestConstant { convergence_csv } => (Suite::Quadrature, convergence_csv),
        Command::Qmatrix => (Suite::Qmatrix, None),
        Command::QuotientMin => (Suite::Quotient, None),
        Command::All => (Suite::All, None),
    };
    let c = cli.common;
    let cfg = SuiteConfig {
        seed: c.seed,
        samples: c.samples.map(|n| n as usize),
        tol: c.tol,
        parallel: c.parallel,
        exec: Exec::Auto,
    };
    let format = match c.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Text => Format::Text,
    };
    let output = run_suite(suite, &cfg).map_err(|e| e.to_string())?;
    let text = emit(&output, format).map_err(|e| e.to_string())?;
    match &c.out {
        Some(path) => write_text(path, &text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(path) = csv_path {
        let file = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_convergence_csv(&output.convergence, file).map_err(|e| e.to_string())?;
    }
    Ok(output.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if cli.common.tol.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
        eprintln!("error: --tol must be a positive number");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
