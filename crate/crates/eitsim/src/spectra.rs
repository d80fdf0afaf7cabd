//! Spectrum sweeps, extrema detection, window widths, and trend curves.
//!
//! A sweep evaluates one of the frequency-domain methods over a probe grid.
//! Grid extrema of the through power seed a golden-section refinement against
//! the underlying evaluator, so refined window locations do not depend on the
//! grid density. Window widths are measured by bisecting for the half-peak
//! crossings between a window and its neighboring transmission dips.

use crate::model::{
    uniform_chain, ChainConfig, Method, ProbeGrid, SpectralPoint, Spectrum, SpectrumSample,
    TransparencyWindow, WindowReport,
};
use crate::steady_state::{
    closed_form_transmission, decoupled_response, solve_steady_state, SteadyStateError,
};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
    #[error("chain construction failed: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("method {} cannot drive a sweep", .0.as_str())]
    UnsupportedMethod(Method),
    #[error("|T|^2 never crosses level {level} inside ({lo}, {hi})")]
    NoCrossing { level: f64, lo: f64, hi: f64 },
    #[error("bracket ({lo}, {hi}) does not contain the peak at {peak}")]
    BadBracket { lo: f64, hi: f64, peak: f64 },
}

/// One frequency-domain evaluator bound to a chain. Construction validates
/// the chain and, for the closed form, its applicability, so per-point
/// evaluation only fails on numerically singular systems.
pub struct Evaluator<'a> {
    config: &'a ChainConfig,
    method: Method,
}

impl<'a> Evaluator<'a> {
    pub fn new(config: &'a ChainConfig, method: Method) -> Result<Self, SpectraError> {
        match method {
            Method::GeneralSolver | Method::Decoupled => {
                let validation = config.validate();
                if !validation.is_valid() {
                    return Err(SteadyStateError::InvalidConfig(validation).into());
                }
            }
            Method::ClosedForm => {
                // Full precondition check, including validity.
                closed_form_transmission(config, 0.0)?;
            }
            Method::TimeDomain => return Err(SpectraError::UnsupportedMethod(method)),
        }
        Ok(Self { config, method })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Through and drop responses at one probe frequency.
    pub fn response(&self, omega: f64) -> Result<(Complex64, Complex64), SpectraError> {
        match self.method {
            Method::GeneralSolver => {
                let solution = solve_steady_state(self.config, omega)?;
                Ok((solution.t, solution.d))
            }
            Method::ClosedForm => {
                // In the symmetric regime the drop response follows from the
                // through response: D = T - 1.
                let t = closed_form_transmission(self.config, omega)?;
                Ok((t, t - 1.0))
            }
            Method::Decoupled => Ok(decoupled_response(self.config, omega)?),
            Method::TimeDomain => Err(SpectraError::UnsupportedMethod(self.method)),
        }
    }

    /// Through-port power, the quantity all window analysis works on.
    pub fn through_power(&self, omega: f64) -> Result<f64, SpectraError> {
        Ok(self.response(omega)?.0.norm_sqr())
    }
}

fn sample_at(evaluator: &Evaluator<'_>, omega: f64) -> Result<SpectrumSample, SpectraError> {
    let (t, d) = evaluator.response(omega)?;
    Ok(SpectrumSample { omega, t, d })
}

/// Evaluates `method` at every grid point, in grid order.
pub fn sweep(
    config: &ChainConfig,
    grid: &ProbeGrid,
    method: Method,
) -> Result<Spectrum, SpectraError> {
    sweep_with_threads(config, grid, method, 1)
}

/// Same as [`sweep`] but splits the grid over `threads` workers. Every grid
/// point is computed by the identical code path, so the result does not
/// depend on the worker count.
pub fn sweep_with_threads(
    config: &ChainConfig,
    grid: &ProbeGrid,
    method: Method,
    threads: usize,
) -> Result<Spectrum, SpectraError> {
    let evaluator = Evaluator::new(config, method)?;
    let omegas: Vec<f64> = grid.values().collect();
    let threads = threads.max(1).min(omegas.len());
    let results: Vec<Result<SpectrumSample, SpectraError>> = if threads <= 1 {
        omegas.iter().map(|&w| sample_at(&evaluator, w)).collect()
    } else {
        let chunk = omegas.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let evaluator = &evaluator;
            let handles: Vec<_> = omegas
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        part.iter().map(|&w| sample_at(evaluator, w)).collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
        })
    };
    let samples = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Spectrum { grid: *grid, method, samples })
}

const GOLDEN_RATIO_STEP: f64 = 0.381_966_011_250_105_1; // (3 - sqrt(5)) / 2

/// Golden-section minimizer on a bracket known to contain one extremum.
fn golden_section_min(
    f: &dyn Fn(f64) -> Result<f64, SpectraError>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64, SpectraError> {
    let mut x1 = lo + GOLDEN_RATIO_STEP * (hi - lo);
    let mut x2 = hi - GOLDEN_RATIO_STEP * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + GOLDEN_RATIO_STEP * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - GOLDEN_RATIO_STEP * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn refinement_tolerance(lo: f64, hi: f64) -> f64 {
    1e-8 * lo.abs().max(hi.abs())
}

/// Locates strict interior extrema of the through power on the grid. Plateaus
/// of exactly equal samples count once, at their leftmost sample. With an
/// evaluator given, each location is polished by golden-section search to a
/// relative tolerance of 1e-8 in omega, removing the grid dependence.
pub fn find_extrema(
    spectrum: &Spectrum,
    refine: Option<&Evaluator<'_>>,
) -> Result<WindowReport, SpectraError> {
    let mut report = WindowReport::default();
    let n = spectrum.samples.len();
    if n < 3 {
        return Ok(report);
    }
    let power: Vec<f64> = spectrum.samples.iter().map(|s| s.t2()).collect();
    let omega = |k: usize| spectrum.samples[k].omega;

    // Runs of equal consecutive values; a run is an extremum of its
    // neighbors' values differ in the same direction on both sides.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..n {
        if power[k] != power[start] {
            runs.push((start, k - 1));
            start = k;
        }
    }
    runs.push((start, n - 1));

    for r in 1..runs.len().saturating_sub(1) {
        let (run_start, run_end) = runs[r];
        let value = power[run_start];
        let prev = power[runs[r - 1].1];
        let next = power[runs[r + 1].0];
        let is_max = value > prev && value > next;
        let is_min = value < prev && value < next;
        if !is_max && !is_min {
            continue;
        }
        let (mut location, mut level) = (omega(run_start), value);
        if let Some(evaluator) = refine {
            let lo = omega(run_start - 1);
            let hi = omega(run_end + 1);
            let tol = refinement_tolerance(lo, hi);
            location = if is_max {
                golden_section_min(&|w| evaluator.through_power(w).map(|p| -p), lo, hi, tol)?
            } else {
                golden_section_min(&|w| evaluator.through_power(w), lo, hi, tol)?
            };
            level = evaluator.through_power(location)?;
        }
        if is_max {
            report.maxima.push(TransparencyWindow { omega: location, power: level, fwhm: None });
        } else {
            report.minima.push(SpectralPoint { omega: location, power: level });
        }
    }
    Ok(report)
}

/// Half-level crossings on both sides of a window peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossings {
    pub left: f64,
    pub right: f64,
}

impl Crossings {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }
}

/// Bisects for `power(omega) == level` between `below` (power under the
/// level) and `above` (power over it).
fn bisect_crossing(
    evaluator: &Evaluator<'_>,
    level: f64,
    mut below: f64,
    mut above: f64,
) -> Result<f64, SpectraError> {
    for _ in 0..200 {
        if (above - below).abs() <= 1e-15 * (above.abs() + below.abs() + 1.0) {
            break;
        }
        let mid = 0.5 * (below + above);
        if evaluator.through_power(mid)? > level {
            above = mid;
        } else {
            below = mid;
        }
    }
    Ok(0.5 * (below + above))
}

/// Measures the full width of a transparency window at `report_level`
/// (default: half the window's own peak power). The crossings are bisected
/// between the peak and the bracketing transmission minima; if the power
/// never falls to the level inside the bracket the window is malformed and
/// an error is returned.
pub fn measure_fwhm(
    evaluator: &Evaluator<'_>,
    peak_omega: f64,
    bracket: (f64, f64),
    report_level: Option<f64>,
) -> Result<Crossings, SpectraError> {
    let (lo, hi) = bracket;
    if !(lo < peak_omega && peak_omega < hi) {
        return Err(SpectraError::BadBracket { lo, hi, peak: peak_omega });
    }
    let peak_power = evaluator.through_power(peak_omega)?;
    let level = report_level.unwrap_or(0.5 * peak_power);
    if peak_power <= level {
        return Err(SpectraError::NoCrossing { level, lo, hi });
    }
    if evaluator.through_power(lo)? >= level || evaluator.through_power(hi)? >= level {
        return Err(SpectraError::NoCrossing { level, lo, hi });
    }
    let left = bisect_crossing(evaluator, level, lo, peak_omega)?;
    let right = bisect_crossing(evaluator, level, hi, peak_omega)?;
    Ok(Crossings { left, right })
}

/// Sweeps, locates extrema with refinement, and fills in the width of every
/// window that is bracketed by minima on both sides and actually falls to
/// half of its peak between them.
pub fn analyze_windows(
    config: &ChainConfig,
    grid: &ProbeGrid,
    method: Method,
) -> Result<WindowReport, SpectraError> {
    let evaluator = Evaluator::new(config, method)?;
    let spectrum = sweep(config, grid, method)?;
    let mut report = find_extrema(&spectrum, Some(&evaluator))?;
    for window in &mut report.maxima {
        let left = report.minima.iter().rev().find(|m| m.omega < window.omega).map(|m| m.omega);
        let right = report.minima.iter().find(|m| m.omega > window.omega).map(|m| m.omega);
        if let (Some(lo), Some(hi)) = (left, right) {
            match measure_fwhm(&evaluator, window.omega, (lo, hi), None) {
                Ok(crossings) => window.fwhm = Some(crossings.width()),
                Err(SpectraError::NoCrossing { .. }) => window.fwhm = None,
                Err(other) => return Err(other),
            }
        }
    }
    Ok(report)
}

/// Which chain parameter a trend curve varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendParameter {
    Kappa1,
    Kappa0,
}

impl TrendParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrendParameter::Kappa1 => "kappa1",
            TrendParameter::Kappa0 => "kappa0",
        }
    }
}

/// One trend-curve point; `value` is `None` where no usable window exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendSample {
    pub param: f64,
    pub value: Option<f64>,
}

/// A measured quantity of the central transparency window versus one
/// parameter, everything else held fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendCurve {
    pub parameter: TrendParameter,
    /// Human-readable record of the fixed parameters.
    pub context: String,
    pub samples: Vec<TrendSample>,
}

/// Probe grid spanning three mode spacings beyond each end of the chain at
/// roughly 2000 intervals per unit spacing.
fn trend_grid(n: usize) -> ProbeGrid {
    let start = -3.0;
    let stop = (n - 1) as f64 + 3.0;
    let points = ((stop - start) * 2000.0).round() as usize + 1;
    ProbeGrid::new(start, stop, points).expect("trend grid is well formed")
}

/// The central window, 1-based index `ceil((n-1)/2)` of the n-1 windows,
/// keeps edge asymmetries out of the trend curves.
fn central_window_index(n: usize) -> usize {
    (n - 1).div_ceil(2) - 1
}

struct CentralWindow {
    window: TransparencyWindow,
    bracket: (f64, f64),
}

fn central_window(
    config: &ChainConfig,
    n: usize,
    evaluator: &Evaluator<'_>,
    grid: &ProbeGrid,
) -> Result<Option<CentralWindow>, SpectraError> {
    if n < 2 {
        return Ok(None);
    }
    let spectrum = sweep(config, grid, evaluator.method())?;
    let report = find_extrema(&spectrum, Some(evaluator))?;
    let index = central_window_index(n);
    let Some(window) = report.maxima.get(index).copied() else {
        return Ok(None);
    };
    let left = report.minima.iter().rev().find(|m| m.omega < window.omega);
    let right = report.minima.iter().find(|m| m.omega > window.omega);
    match (left, right) {
        (Some(lo), Some(hi)) => Ok(Some(CentralWindow { window, bracket: (lo.omega, hi.omega) })),
        _ => Ok(None),
    }
}

/// A window wider than half the mode spacing is no longer a narrow
/// transparency feature; the trend curves mark such points as "no window".
const WINDOW_WIDTH_CUTOFF: f64 = 0.5;

/// Width of the central transparency window versus the waveguide coupling
/// rate, for `n` identical cavities with unit mode spacing and intrinsic
/// loss `kappa0_over_delta`. Points whose window has merged into the
/// background (weak coupling) carry no value.
pub fn fwhm_vs_kappa1(
    n: usize,
    kappa0_over_delta: f64,
    kappa1_range: &[f64],
) -> Result<TrendCurve, SpectraError> {
    let mut params = kappa1_range.to_vec();
    params.sort_by(|a, b| a.partial_cmp(b).expect("kappa1 range contains NaN"));
    let grid = trend_grid(n);
    let mut samples = Vec::with_capacity(params.len());
    for &kappa1 in &params {
        let config = uniform_chain(n, kappa0_over_delta, kappa1, kappa1, 1.0)?;
        let evaluator = Evaluator::new(&config, Method::ClosedForm)?;
        let value = match central_window(&config, n, &evaluator, &grid)? {
            Some(found) => {
                match measure_fwhm(&evaluator, found.window.omega, found.bracket, None) {
                    Ok(crossings) if crossings.width() < WINDOW_WIDTH_CUTOFF => {
                        Some(crossings.width())
                    }
                    Ok(_) => None,
                    Err(SpectraError::NoCrossing { .. }) => None,
                    Err(other) => return Err(other),
                }
            }
            None => None,
        };
        samples.push(TrendSample { param: kappa1, value });
    }
    Ok(TrendCurve {
        parameter: TrendParameter::Kappa1,
        context: format!("n={n}, kappa0/delta={kappa0_over_delta}, kappa2=kappa1, delta=1"),
        samples,
    })
}

/// Peak power of the central transparency window versus the intrinsic loss
/// rate, for `n` identical cavities with unit mode spacing and waveguide
/// coupling `kappa1_over_delta`.
pub fn tmax_vs_kappa0(
    n: usize,
    kappa1_over_delta: f64,
    kappa0_range: &[f64],
) -> Result<TrendCurve, SpectraError> {
    let mut params = kappa0_range.to_vec();
    params.sort_by(|a, b| a.partial_cmp(b).expect("kappa0 range contains NaN"));
    let grid = trend_grid(n);
    let mut samples = Vec::with_capacity(params.len());
    for &kappa0 in &params {
        let config = uniform_chain(n, kappa0, kappa1_over_delta, kappa1_over_delta, 1.0)?;
        let evaluator = Evaluator::new(&config, Method::ClosedForm)?;
        let value = central_window(&config, n, &evaluator, &grid)?.map(|found| found.window.power);
        samples.push(TrendSample { param: kappa0, value });
    }
    Ok(TrendCurve {
        parameter: TrendParameter::Kappa0,
        context: format!("n={n}, kappa1/delta={kappa1_over_delta}, kappa2=kappa1, delta=1"),
        samples,
    })
}
