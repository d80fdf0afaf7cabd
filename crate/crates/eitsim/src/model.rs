//! Domain types shared by every solver and analysis routine.
//!
//! Cavities are numbered 1..N left to right, following the propagation
//! direction of the bus input; serialized forms use 0-based arrays. All
//! types are plain immutable values and safe to share across threads.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One resonator: its center frequency, the three decay rates, and the
/// propagation phase to the next cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    /// Center frequency of the cavity mode.
    pub omega: f64,
    /// Intrinsic loss rate (decay into free space, not into a waveguide).
    pub kappa0: f64,
    /// Coupling rate to the bus waveguide.
    pub kappa1: f64,
    /// Coupling rate to the drop waveguide.
    pub kappa2: f64,
    /// Phase delay accumulated along both waveguides between this cavity and
    /// the next one (radians). For the last cavity the value only contributes
    /// a constant phase to the through response.
    #[serde(default)]
    pub phi_next: f64,
}

impl CavityParams {
    /// Total dissipation rate of the cavity mode.
    pub fn kappa_total(&self) -> f64 {
        self.kappa0 + self.kappa1 + self.kappa2
    }
}

fn default_input() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Full description of a chain: the ordered cavities plus the drive amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// Cavities ordered left to right along the bus.
    pub cavities: Vec<CavityParams>,
    /// Input field amplitude on the bus. Reported responses are ratios to
    /// this value, so it only matters for raw amplitude output.
    #[serde(default = "default_input")]
    pub a_in: Complex64,
}

impl ChainConfig {
    pub fn new(cavities: Vec<CavityParams>) -> Self {
        Self { cavities, a_in: default_input() }
    }

    pub fn len(&self) -> usize {
        self.cavities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cavities.is_empty()
    }

    /// Largest total dissipation rate over the chain (0 for an empty chain).
    pub fn kappa_max(&self) -> f64 {
        self.cavities.iter().map(|c| c.kappa_total()).fold(0.0, f64::max)
    }

    /// Smallest strictly positive total dissipation rate, if any cavity has one.
    pub fn kappa_min_positive(&self) -> Option<f64> {
        self.cavities
            .iter()
            .map(|c| c.kappa_total())
            .filter(|&k| k > 0.0)
            .fold(None, |acc, k| Some(acc.map_or(k, |a: f64| a.min(k))))
    }

    pub fn validate(&self) -> ValidationResult {
        validate(self)
    }
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// The chain holds no cavities at all.
    EmptyChain,
    /// A decay rate is negative. `cavity` is 1-based.
    NegativeRate { cavity: usize, rate: &'static str, value: f64 },
    /// A parameter is NaN or infinite. `cavity` is 1-based.
    NonFinite { cavity: usize, field: &'static str },
    /// The drive amplitude is NaN or infinite.
    NonFiniteInput,
    /// The drive amplitude is exactly zero; responses are ratios to it.
    ZeroInput,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptyChain => write!(f, "empty chain"),
            Violation::NegativeRate { cavity, rate, value } => {
                write!(f, "cavity {cavity}: negative rate {rate} = {value}")
            }
            Violation::NonFinite { cavity, field } => {
                write!(f, "cavity {cavity}: {field} is not finite")
            }
            Violation::NonFiniteInput => write!(f, "a_in is not finite"),
            Violation::ZeroInput => write!(f, "a_in is zero"),
        }
    }
}

/// Outcome of [`validate`]: an empty violation list means the config is usable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        let mut first = true;
        for v in &self.violations {
            if !first {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Checks every chain invariant and reports all violations as data.
pub fn validate(config: &ChainConfig) -> ValidationResult {
    let mut violations = Vec::new();
    if config.cavities.is_empty() {
        violations.push(Violation::EmptyChain);
    }
    for (idx, c) in config.cavities.iter().enumerate() {
        let cavity = idx + 1;
        for (field, value) in [("omega", c.omega), ("phi_next", c.phi_next)] {
            if !value.is_finite() {
                violations.push(Violation::NonFinite { cavity, field });
            }
        }
        for (rate, value) in [("kappa0", c.kappa0), ("kappa1", c.kappa1), ("kappa2", c.kappa2)] {
            if !value.is_finite() {
                violations.push(Violation::NonFinite { cavity, field: rate });
            } else if value < 0.0 {
                violations.push(Violation::NegativeRate { cavity, rate, value });
            }
        }
    }
    if !config.a_in.re.is_finite() || !config.a_in.im.is_finite() {
        violations.push(Violation::NonFiniteInput);
    } else if config.a_in == Complex64::new(0.0, 0.0) {
        violations.push(Violation::ZeroInput);
    }
    ValidationResult { violations }
}

/// Construction errors for chains and grids.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("chain must contain at least one cavity")]
    EmptyChain,
    #[error("{name} must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("{name} must be finite")]
    NonFinite { name: &'static str },
    #[error("probe grid requires finite start < stop and points >= 2")]
    BadGrid,
}

/// Builds N identical cavities with centers spaced by `delta`
/// (`omega_i = (i - 1) * delta`) and all inter-cavity phases zero.
pub fn uniform_chain(
    n: usize,
    kappa0: f64,
    kappa1: f64,
    kappa2: f64,
    delta: f64,
) -> Result<ChainConfig, ModelError> {
    if n < 1 {
        return Err(ModelError::EmptyChain);
    }
    for (name, value) in [("kappa0", kappa0), ("kappa1", kappa1), ("kappa2", kappa2)] {
        if !value.is_finite() {
            return Err(ModelError::NonFinite { name });
        }
        if value < 0.0 {
            return Err(ModelError::NegativeRate { name, value });
        }
    }
    if !delta.is_finite() {
        return Err(ModelError::NonFinite { name: "delta" });
    }
    let cavities = (0..n)
        .map(|i| CavityParams { omega: i as f64 * delta, kappa0, kappa1, kappa2, phi_next: 0.0 })
        .collect();
    Ok(ChainConfig::new(cavities))
}

/// A uniform, inclusive probe-frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl ProbeGrid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self, ModelError> {
        if !(start.is_finite() && stop.is_finite()) || !(start < stop) || points < 2 {
            return Err(ModelError::BadGrid);
        }
        Ok(Self { start, stop, points })
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }

    /// Probe frequency at sample `k`; the endpoints are reproduced exactly.
    pub fn omega(&self, k: usize) -> f64 {
        debug_assert!(k < self.points);
        if k == self.points - 1 {
            self.stop
        } else {
            self.start + self.step() * k as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|k| self.omega(k))
    }
}

/// Which evaluator produced a spectrum or solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Dense steady-state solve of the full coupled system.
    GeneralSolver,
    /// Closed form for identical cavities with `kappa1 == kappa2` and zero phases.
    ClosedForm,
    /// Every cavity's drop output lost to free space; no inter-cavity interference.
    Decoupled,
    /// Relaxation of the coupled-mode equations to their fixed point.
    TimeDomain,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GeneralSolver => "general-solver",
            Method::ClosedForm => "closed-form",
            Method::Decoupled => "decoupled",
            Method::TimeDomain => "time-domain",
        }
    }
}

/// Steady state at one probe frequency: intracavity amplitudes plus the
/// through (`t`) and drop (`d`) responses, both normalized to the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSolution {
    pub omega: f64,
    pub amplitudes: Vec<Complex64>,
    pub t: Complex64,
    pub d: Complex64,
}

impl FieldSolution {
    /// Through-port power transmission.
    pub fn t2(&self) -> f64 {
        self.t.norm_sqr()
    }

    /// Drop-port power transmission.
    pub fn d2(&self) -> f64 {
        self.d.norm_sqr()
    }
}

/// Reduced record of the two port responses at one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumSample {
    pub omega: f64,
    pub t: Complex64,
    pub d: Complex64,
}

impl SpectrumSample {
    pub fn t2(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn d2(&self) -> f64 {
        self.d.norm_sqr()
    }
}

/// Port responses sampled over a probe grid, strictly increasing in omega.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub grid: ProbeGrid,
    pub method: Method,
    pub samples: Vec<SpectrumSample>,
}

impl Spectrum {
    pub fn through_powers(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t2()).collect()
    }
}

/// A located transmission extremum: probe frequency and |T|^2 there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub omega: f64,
    pub power: f64,
}

/// A transparency window: an interior |T|^2 maximum with an optional
/// full width at half of its own peak value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransparencyWindow {
    pub omega: f64,
    pub power: f64,
    pub fwhm: Option<f64>,
}

/// Detected minima and maxima of a through-power spectrum, each sorted by
/// probe frequency; consecutive extrema alternate in type.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WindowReport {
    pub minima: Vec<SpectralPoint>,
    pub maxima: Vec<TransparencyWindow>,
}
