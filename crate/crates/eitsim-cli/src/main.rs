//! Command-line front end: config ingestion, subcommand orchestration, and
//! reproducible tabular/plot output.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 config-schema violation, 3 evaluator
//! precondition error, 4 oracle mismatch.

mod commands;
mod config;
mod plot;
mod table;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eitsim::model::Method;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "eitsim",
    version,
    about = "Through/drop spectra and transparency-window analysis for chains of \
             resonators side-coupled to a bus and a drop waveguide"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the chain response over a probe grid and write a CSV table.
    Spectrum(SpectrumArgs),
    /// Emit coupled and decoupled spectra for a reference chain of n identical
    /// cavities (kappa0/kappa1 = 1e-3, kappa1 = kappa2 = 2 in mode-spacing units).
    Figure2(Figure2Args),
    /// Trend curves of the central transparency window: FWHM vs kappa1
    /// (panel a) or peak transmission vs kappa0 (panel b).
    Figure3(Figure3Args),
    /// Locate transmission extrema and measure window widths.
    Windows(WindowsArgs),
    /// Cross-check the steady-state solver against time-domain relaxation
    /// and the power balance.
    OracleCheck(OracleCheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    /// Dense steady-state solve; works for any chain.
    Solver,
    /// Closed form; requires identical cavities, kappa1 == kappa2, zero phases.
    Closed,
    /// Independent-cavity reference with the drop feedback removed.
    Decoupled,
}

impl MethodArg {
    fn to_method(self) -> Method {
        match self {
            MethodArg::Solver => Method::GeneralSolver,
            MethodArg::Closed => Method::ClosedForm,
            MethodArg::Decoupled => Method::Decoupled,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PanelArg {
    A,
    B,
}

#[derive(Args)]
pub struct SpectrumArgs {
    /// Path to a JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Evaluator override.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render an SVG plot of |T|^2 over the grid.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Override the number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Worker threads for the sweep; output bytes do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Logarithmic power axis in the SVG plot.
    #[arg(long)]
    pub log_y: bool,
}

#[derive(Args)]
pub struct Figure2Args {
    /// Number of cavities, 1 through 6.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=6))]
    pub n: u32,
    /// Output stem; writes <stem>_coupled.csv and <stem>_decoupled.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overlay SVG of the coupled and decoupled |T|^2 curves.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Override the number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Worker threads for the sweeps.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Logarithmic power axis in the SVG plot.
    #[arg(long)]
    pub log_y: bool,
}

#[derive(Args)]
pub struct Figure3Args {
    /// Which trend to compute: a (FWHM vs kappa1) or b (peak |T|^2 vs kappa0).
    #[arg(long, value_enum)]
    pub panel: PanelArg,
    /// Number of cavities in the swept chains.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render an SVG plot of the trend.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args)]
pub struct WindowsArgs {
    /// Path to a JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Evaluator override.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args)]
pub struct OracleCheckArgs {
    /// Path to a JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Number of probe frequencies spread over the grid span.
    #[arg(long, default_value_t = 16)]
    pub probes: usize,
    /// Relaxation convergence tolerance override.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(args) => commands::cmd_spectrum(args),
        Command::Figure2(args) => commands::cmd_figure2(args),
        Command::Figure3(args) => commands::cmd_figure3(args),
        Command::Windows(args) => commands::cmd_windows(args),
        Command::OracleCheck(args) => commands::cmd_oracle_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
