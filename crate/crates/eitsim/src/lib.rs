//! Simulator and analysis toolkit for a chain of whispering-gallery resonators
//! side-coupled to two parallel waveguides (a bus carrying the input and a
//! drop line collecting the transferred power).
//!
//! The crate computes the complex through-port and drop-port responses of such a
//! chain, either exactly (dense steady-state solve, [`steady_state`]), through
//! a closed form valid for identical symmetric cavities
//! ([`steady_state::closed_form_transmission`]), or by relaxing the coupled-mode
//! equations in time ([`time_domain`]). On top of that, [`spectra`] sweeps
//! probe grids, locates the transmission dips and the narrow transparency
//! windows between them, and measures window widths and peak heights.
//!
//! Units: every frequency and rate is a plain `f64` in one consistent
//! angular-frequency unit. All bundled reference figures use the nominal mode
//! spacing as that unit (`delta = 1`); only ratios of rates matter.

pub mod linalg;
pub mod model;
pub mod spectra;
pub mod steady_state;
pub mod time_domain;

pub use model::{
    uniform_chain, validate, CavityParams, ChainConfig, FieldSolution, Method, ModelError,
    ProbeGrid, SpectralPoint, Spectrum, SpectrumSample, TransparencyWindow, ValidationResult,
    Violation, WindowReport,
};
pub use num_complex::Complex64;
