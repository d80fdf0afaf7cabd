//! Subcommand implementations and the exit-code policy.

use crate::config::{self, ResolvedRun};
use crate::plot::{line_plot, PlotOptions, Series};
use crate::table;
use crate::{Figure2Args, Figure3Args, OracleCheckArgs, PanelArg, SpectrumArgs, WindowsArgs};
use eitsim::model::{uniform_chain, Method, ProbeGrid, Spectrum};
use eitsim::spectra::{
    analyze_windows, fwhm_vs_kappa1, sweep_with_threads, tmax_vs_kappa0, SpectraError, TrendCurve,
    TrendParameter,
};
use eitsim::steady_state::{energy_balance, solve_steady_state, SteadyStateError};
use eitsim::time_domain::{integrate_to_steady_state, IntegrationSettings, TimeDomainError};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Reference chain parameters behind `figure2`: intrinsic loss one
/// thousandth of the waveguide coupling, coupling twice the mode spacing.
const FIGURE2_KAPPA0: f64 = 0.002;
const FIGURE2_KAPPA1: f64 = 2.0;

/// figure3 defaults: panel a sweeps kappa1 at fixed kappa0/delta = 1e-4,
/// panel b sweeps kappa0 at fixed kappa1/delta = 2.
const FIGURE3A_KAPPA0: f64 = 1e-4;
const FIGURE3A_KAPPA1_RANGE: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];
const FIGURE3B_KAPPA1: f64 = 2.0;
const FIGURE3B_KAPPA0_RANGE: [f64; 6] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];

/// Agreement thresholds for `oracle-check`.
const ORACLE_T_THRESHOLD: f64 = 1e-6;
const ORACLE_RESIDUAL_THRESHOLD: f64 = 1e-9;

#[derive(Debug)]
pub enum CliError {
    /// Exit 1: reading or writing a file failed.
    Io(String),
    /// Exit 2: the configuration violates the schema or a chain invariant.
    Schema(String),
    /// Exit 3: an evaluator was asked to run outside its preconditions.
    Precondition(String),
    /// Exit 4: the solver and the dynamical oracle disagree.
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Schema(m) => write!(f, "config schema: {m}"),
            CliError::Precondition(m) => write!(f, "evaluator precondition: {m}"),
            CliError::Mismatch(m) => write!(f, "oracle mismatch: {m}"),
        }
    }
}

fn map_steady_state(error: SteadyStateError) -> CliError {
    match error {
        SteadyStateError::InvalidConfig(v) => CliError::Schema(format!("chain: {v}")),
        SteadyStateError::ClosedFormPrecondition { .. } | SteadyStateError::Singular { .. } => {
            CliError::Precondition(error.to_string())
        }
    }
}

fn map_spectra(error: SpectraError) -> CliError {
    match error {
        SpectraError::SteadyState(inner) => map_steady_state(inner),
        SpectraError::Model(inner) => CliError::Schema(inner.to_string()),
        SpectraError::UnsupportedMethod(_)
        | SpectraError::NoCrossing { .. }
        | SpectraError::BadBracket { .. } => CliError::Precondition(error.to_string()),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn spectrum_plot(spectra: &[(&str, &'static str, &Spectrum)], title: &str, log_y: bool) -> String {
    let series: Vec<Series> = spectra
        .iter()
        .map(|(label, color, spectrum)| Series {
            label: (*label).to_string(),
            color,
            points: spectrum.samples.iter().map(|s| (s.omega, s.t2())).collect(),
        })
        .collect();
    line_plot(
        &series,
        &PlotOptions {
            title: title.to_string(),
            x_label: "probe frequency (mode-spacing units)".into(),
            y_label: "|T|^2".into(),
            log_y,
        },
    )
}

pub fn cmd_spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let run = config::load(&args.config)?;
    let ResolvedRun { chain, grid, method, out, svg, label } =
        config::resolve(run, args.method.map(|m| m.to_method()), args.points)?;
    let spectrum = sweep_with_threads(&chain, &grid, method, args.threads).map_err(map_spectra)?;
    eprintln!(
        "spectrum: {label} | method {} | grid [{}, {}] x {}",
        method.as_str(),
        grid.start,
        grid.stop,
        grid.points
    );
    let csv = table::spectrum_csv(&spectrum);
    write_output(args.out.or(out).as_deref(), &csv)?;
    if let Some(svg_path) = args.svg.or(svg) {
        let title = format!("{label} [{}]", method.as_str());
        let document = spectrum_plot(&[("|T|^2", "#d62728", &spectrum)], &title, args.log_y);
        std::fs::write(&svg_path, document)
            .map_err(|e| CliError::Io(format!("{}: {e}", svg_path.display())))?;
    }
    Ok(())
}

fn suffixed(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    stem.with_file_name(name)
}

pub fn cmd_figure2(args: Figure2Args) -> Result<(), CliError> {
    let n = args.n as usize;
    let chain = uniform_chain(n, FIGURE2_KAPPA0, FIGURE2_KAPPA1, FIGURE2_KAPPA1, 1.0)
        .map_err(|e| CliError::Schema(e.to_string()))?;
    let start = -3.0;
    let stop = (n - 1) as f64 + 3.0;
    let points = args.points.unwrap_or(((stop - start) * 2000.0).round() as usize + 1);
    let grid = ProbeGrid::new(start, stop, points)
        .map_err(|e| CliError::Schema(format!("--points: {e}")))?;

    let coupled = sweep_with_threads(&chain, &grid, Method::GeneralSolver, args.threads)
        .map_err(map_spectra)?;
    let decoupled =
        sweep_with_threads(&chain, &grid, Method::Decoupled, args.threads).map_err(map_spectra)?;

    let stem = args.out.unwrap_or_else(|| PathBuf::from(format!("figure2_n{n}")));
    let coupled_path = suffixed(&stem, "_coupled.csv");
    let decoupled_path = suffixed(&stem, "_decoupled.csv");
    write_output(Some(&coupled_path), &table::spectrum_csv(&coupled))?;
    write_output(Some(&decoupled_path), &table::spectrum_csv(&decoupled))?;
    eprintln!(
        "figure2: n={n} kappa0={FIGURE2_KAPPA0} kappa1=kappa2={FIGURE2_KAPPA1} -> {}, {}",
        coupled_path.display(),
        decoupled_path.display()
    );

    if let Some(svg_path) = args.svg {
        let title = format!(
            "n={n}, kappa0/kappa1={}, kappa1/delta={FIGURE2_KAPPA1}",
            FIGURE2_KAPPA0 / FIGURE2_KAPPA1
        );
        let document = spectrum_plot(
            &[("coupled", "#d62728", &coupled), ("decoupled", "#1f77b4", &decoupled)],
            &title,
            args.log_y,
        );
        std::fs::write(&svg_path, document)
            .map_err(|e| CliError::Io(format!("{}: {e}", svg_path.display())))?;
    }
    Ok(())
}

fn trend_plot(curve: &TrendCurve, title: &str) -> String {
    let points: Vec<(f64, f64)> =
        curve.samples.iter().filter_map(|s| s.value.map(|v| (s.param.log10(), v))).collect();
    let series = vec![Series { label: curve.parameter.as_str().into(), color: "#d62728", points }];
    line_plot(
        &series,
        &PlotOptions {
            title: title.to_string(),
            x_label: format!("log10({}/delta)", curve.parameter.as_str()),
            y_label: match curve.parameter {
                TrendParameter::Kappa1 => "window FWHM (mode-spacing units)".into(),
                TrendParameter::Kappa0 => "peak |T|^2".into(),
            },
            log_y: false,
        },
    )
}

pub fn cmd_figure3(args: Figure3Args) -> Result<(), CliError> {
    let curve =
        match args.panel {
            PanelArg::A => fwhm_vs_kappa1(args.n, FIGURE3A_KAPPA0, &FIGURE3A_KAPPA1_RANGE)
                .map_err(map_spectra)?,
            PanelArg::B => tmax_vs_kappa0(args.n, FIGURE3B_KAPPA1, &FIGURE3B_KAPPA0_RANGE)
                .map_err(map_spectra)?,
        };
    eprintln!("figure3: {}", curve.context);
    write_output(args.out.as_deref(), &table::trend_csv(&curve))?;
    if let Some(svg_path) = args.svg {
        let document = trend_plot(&curve, &curve.context);
        std::fs::write(&svg_path, document)
            .map_err(|e| CliError::Io(format!("{}: {e}", svg_path.display())))?;
    }
    Ok(())
}

pub fn cmd_windows(args: WindowsArgs) -> Result<(), CliError> {
    let run = config::load(&args.config)?;
    let ResolvedRun { chain, grid, method, out, .. } =
        config::resolve(run, args.method.map(|m| m.to_method()), args.points)?;
    let report = analyze_windows(&chain, &grid, method).map_err(map_spectra)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
    text.push('\n');
    write_output(args.out.or(out).as_deref(), &text)
}

pub fn cmd_oracle_check(args: OracleCheckArgs) -> Result<(), CliError> {
    let run = config::load(&args.config)?;
    let ResolvedRun { chain, grid, out, .. } = config::resolve(run, None, None)?;
    let probes = args.probes.max(2);
    let mut settings = IntegrationSettings::for_chain(&chain);
    if let Some(rel_tol) = args.rel_tol {
        settings.rel_tol = rel_tol;
    }

    let mut report = String::new();
    report.push_str(&format!("probes: {probes}\n"));
    report.push_str(&format!(
        "integration: dt={:e} rel_tol={:e} max_time={:e}\n",
        settings.dt, settings.rel_tol, settings.max_time
    ));

    let mut max_diff = 0.0f64;
    let mut max_residual = 0.0f64;
    let mut stuck = 0usize;
    for k in 0..probes {
        let fraction = k as f64 / (probes - 1) as f64;
        let omega = grid.start + (grid.stop - grid.start) * fraction;
        let direct = solve_steady_state(&chain, omega).map_err(map_steady_state)?;
        let residual = energy_balance(&chain, &direct).residual.abs();
        let (diff, note) = match integrate_to_steady_state(&chain, omega, &settings) {
            Ok(dynamic) => ((dynamic.t - direct.t).norm(), ""),
            Err(TimeDomainError::NoConvergence { solution, .. }) => {
                stuck += 1;
                ((solution.t - direct.t).norm(), "  (no steady state within horizon)")
            }
            Err(TimeDomainError::InvalidConfig(v)) => {
                return Err(CliError::Schema(format!("chain: {v}")))
            }
            Err(TimeDomainError::BadSettings(m)) => return Err(CliError::Precondition(m)),
        };
        max_diff = max_diff.max(diff);
        max_residual = max_residual.max(residual);
        report.push_str(&format!(
            "omega {omega:+.6e}: |T_td - T_solver| = {diff:.3e}, balance residual = {residual:.3e}{note}\n"
        ));
    }

    let pass =
        max_diff < ORACLE_T_THRESHOLD && max_residual < ORACLE_RESIDUAL_THRESHOLD && stuck == 0;
    report.push_str(&format!(
        "max |T_td - T_solver|: {max_diff:.3e} (threshold {ORACLE_T_THRESHOLD:e})\n"
    ));
    report.push_str(&format!(
        "max balance residual: {max_residual:.3e} (threshold {ORACLE_RESIDUAL_THRESHOLD:e})\n"
    ));
    report.push_str(if pass { "status: ok\n" } else { "status: MISMATCH\n" });
    write_output(args.out.or(out).as_deref(), &report)?;

    if pass {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "max |T| difference {max_diff:.3e}, max residual {max_residual:.3e}, non-converged probes {stuck}"
        )))
    }
}
