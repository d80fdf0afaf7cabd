//! Exact frequency-domain responses of the chain.
//!
//! The steady state of the coupled-mode equations is linear in the cavity
//! amplitudes once the waveguide fields are eliminated. For cavity i (1-based)
//! at probe frequency `omega` the balance reads
//!
//! ```text
//! (i*Delta_i - kappa_i/2) a_i - sqrt(k1_i) a_i_in - sqrt(k2_i) e^{i phi_i} a_{i+1}_out = 0
//! ```
//!
//! with `Delta_i = omega - omega_i` and `kappa_i = k0_i + k1_i + k2_i`. The bus
//! field entering cavity i collects the drive plus every upstream cavity's bus
//! emission; the drop field arriving from the right collects every downstream
//! cavity's drop emission:
//!
//! ```text
//! a_i_in  = e^{i Phi(1,i-1)} a_in + sum_{j<i}  e^{i Phi(j,i-1)} sqrt(k1_j) a_j
//! a_i_out = sum_{j>=i} e^{i Phi(i,j-1)} sqrt(k2_j) a_j
//! ```
//!
//! where `Phi(p,q)` sums the inter-cavity phases `phi_p..phi_q` (empty sum =
//! 0). Eliminating the waveguide fields yields a dense N x N complex system;
//! [`solve_steady_state`] assembles and solves it for arbitrary parameters.
//! [`closed_form_transmission`] is the fast path for identical symmetric
//! cavities, and [`decoupled_response`] is the no-interference reference in
//! which each cavity's drop output is lost to free space.
//!
//! Sign convention: drive terms enter the equations of motion with `-sqrt(k)`
//! and the output relations add `+sqrt(k) a`. Other textbook conventions
//! change only overall phases of the responses, never the powers; this one is
//! fixed so that serialized output is reproducible bit for bit.

use crate::linalg::{self, ComplexMatrix};
use crate::model::{ChainConfig, FieldSolution, ValidationResult};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Below this squared magnitude of `i*Delta_i - kappa0/2` the closed-form
/// resolvent term diverges and the transmission limit is exactly zero.
const SINGULAR_TERM_EPS: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyStateError {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(ValidationResult),
    #[error("steady-state system is numerically singular at omega = {omega}")]
    Singular { omega: f64 },
    #[error("closed form does not apply: {reason}")]
    ClosedFormPrecondition { reason: String },
}

fn ensure_valid(config: &ChainConfig) -> Result<(), SteadyStateError> {
    let result = config.validate();
    if result.is_valid() {
        Ok(())
    } else {
        Err(SteadyStateError::InvalidConfig(result))
    }
}

/// Cumulative phases: `prefix[k] = phi_1 + ... + phi_k`, `prefix[0] = 0`.
fn phase_prefix(config: &ChainConfig) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(config.len() + 1);
    prefix.push(0.0);
    for c in &config.cavities {
        let last = *prefix.last().unwrap();
        prefix.push(last + c.phi_next);
    }
    prefix
}

fn unit_phase(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

/// Assembles the dense steady-state system `M a = rhs` for the cavity
/// amplitudes at one probe frequency. Row i carries the coefficients of
/// `a_1..a_N` in cavity i's balance equation after eliminating the
/// waveguide fields; the drive lands on the right-hand side.
pub fn assemble_system(
    config: &ChainConfig,
    omega: f64,
) -> Result<(ComplexMatrix, Vec<Complex64>), SteadyStateError> {
    ensure_valid(config)?;
    let n = config.len();
    let prefix = phase_prefix(config);
    let sqrt_k1: Vec<f64> = config.cavities.iter().map(|c| c.kappa1.sqrt()).collect();
    let sqrt_k2: Vec<f64> = config.cavities.iter().map(|c| c.kappa2.sqrt()).collect();

    let mut matrix = ComplexMatrix::zeros(n);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let cavity = &config.cavities[i];
        matrix[(i, i)] = Complex64::new(-cavity.kappa_total() / 2.0, omega - cavity.omega);
        for j in 0..i {
            // bus emission of cavity j reaching cavity i
            matrix[(i, j)] = -(sqrt_k1[i] * sqrt_k1[j]) * unit_phase(prefix[i] - prefix[j]);
        }
        for j in i + 1..n {
            // drop emission of cavity j traveling back to cavity i
            matrix[(i, j)] = -(sqrt_k2[i] * sqrt_k2[j]) * unit_phase(prefix[j] - prefix[i]);
        }
        rhs[i] = sqrt_k1[i] * unit_phase(prefix[i]) * config.a_in;
    }
    Ok((matrix, rhs))
}

/// Through and drop responses reconstructed from intracavity amplitudes,
/// normalized to the drive. Shared by the solver and the time-domain
/// integrator so both report ports identically.
pub fn port_responses(config: &ChainConfig, amplitudes: &[Complex64]) -> (Complex64, Complex64) {
    let n = config.len();
    assert_eq!(amplitudes.len(), n, "amplitude vector does not match the chain size");
    let prefix = phase_prefix(config);
    let mut through = unit_phase(prefix[n]) * config.a_in;
    let mut drop = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let cavity = &config.cavities[j];
        through += unit_phase(prefix[n] - prefix[j]) * cavity.kappa1.sqrt() * amplitudes[j];
        drop += unit_phase(prefix[j]) * cavity.kappa2.sqrt() * amplitudes[j];
    }
    (through / config.a_in, drop / config.a_in)
}

/// Solves the assembled system and reports amplitudes and port responses.
pub fn solve_steady_state(
    config: &ChainConfig,
    omega: f64,
) -> Result<FieldSolution, SteadyStateError> {
    let (mut matrix, mut rhs) = assemble_system(config, omega)?;
    linalg::solve_in_place(&mut matrix, &mut rhs)
        .map_err(|_| SteadyStateError::Singular { omega })?;
    let (t, d) = port_responses(config, &rhs);
    Ok(FieldSolution { omega, amplitudes: rhs, t, d })
}

/// Checks the regime in which the closed form is exact: identical cavities,
/// equal bus and drop coupling, and no inter-cavity phases.
fn closed_form_applicability(config: &ChainConfig) -> Result<(), SteadyStateError> {
    let first = &config.cavities[0];
    let uniform = config
        .cavities
        .iter()
        .all(|c| c.kappa0 == first.kappa0 && c.kappa1 == first.kappa1 && c.kappa2 == first.kappa2);
    if !uniform {
        return Err(SteadyStateError::ClosedFormPrecondition {
            reason: "cavity rates are not identical across the chain".into(),
        });
    }
    if first.kappa1 != first.kappa2 {
        return Err(SteadyStateError::ClosedFormPrecondition {
            reason: format!("kappa1 = {} differs from kappa2 = {}", first.kappa1, first.kappa2),
        });
    }
    if config.cavities.iter().any(|c| c.phi_next != 0.0) {
        return Err(SteadyStateError::ClosedFormPrecondition {
            reason: "inter-cavity phases must all be zero".into(),
        });
    }
    Ok(())
}

/// Closed-form through response for a chain of identical cavities with
/// `kappa1 == kappa2` and zero phases:
///
/// ```text
/// T = 1 / (1 - kappa1 * c),   c = sum_i 1 / (i*Delta_i - kappa0/2)
/// ```
///
/// If any resolvent term is singular (`kappa0 = 0` at exact resonance) the
/// analytic limit `T = 0` is returned.
pub fn closed_form_transmission(
    config: &ChainConfig,
    omega: f64,
) -> Result<Complex64, SteadyStateError> {
    ensure_valid(config)?;
    closed_form_applicability(config)?;
    let kappa0 = config.cavities[0].kappa0;
    let kappa1 = config.cavities[0].kappa1;
    let half_k0 = kappa0 / 2.0;
    let mut resolvent_sum = Complex64::new(0.0, 0.0);
    for cavity in &config.cavities {
        let detuning = omega - cavity.omega;
        if detuning * detuning + half_k0 * half_k0 < SINGULAR_TERM_EPS {
            return Ok(Complex64::new(0.0, 0.0));
        }
        resolvent_sum += Complex64::new(-half_k0, detuning).inv();
    }
    Ok((Complex64::new(1.0, 0.0) - kappa1 * resolvent_sum).inv())
}

/// Through and drop responses with every cavity's drop output lost to free
/// space. The bus then sees a cascade of independent single-cavity filters,
/// so the through response is the product of the per-cavity responses
/// `(i*Delta_i - kappa_i/2 + kappa1_i) / (i*Delta_i - kappa_i/2)`. Only the
/// first cavity's drop emission still reaches the drop port (nothing sits
/// between them), which also makes the single-cavity case coincide exactly
/// with the coupled solution.
pub fn decoupled_response(
    config: &ChainConfig,
    omega: f64,
) -> Result<(Complex64, Complex64), SteadyStateError> {
    ensure_valid(config)?;
    let prefix = phase_prefix(config);
    let mut through = unit_phase(prefix[config.len()]);
    for cavity in &config.cavities {
        if cavity.kappa1 == 0.0 {
            continue; // transparent to the bus
        }
        let pole = Complex64::new(-cavity.kappa_total() / 2.0, omega - cavity.omega);
        through *= (pole + cavity.kappa1) / pole;
    }
    let first = &config.cavities[0];
    let gain = (first.kappa1 * first.kappa2).sqrt();
    let drop = if gain > 0.0 {
        let pole = Complex64::new(-first.kappa_total() / 2.0, omega - first.omega);
        gain * pole.inv()
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok((through, drop))
}

/// Through response of the decoupled reference model.
pub fn decoupled_transmission(
    config: &ChainConfig,
    omega: f64,
) -> Result<Complex64, SteadyStateError> {
    decoupled_response(config, omega).map(|(t, _)| t)
}

/// Power bookkeeping of one steady state: through plus drop plus intrinsic
/// loss must account for the full input power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceReport {
    pub through_power: f64,
    pub drop_power: f64,
    pub intrinsic_loss: f64,
    /// `1 - (through + drop + loss)`; vanishes for any valid configuration.
    pub residual: f64,
}

/// Audits power conservation for a solution of [`solve_steady_state`].
pub fn energy_balance(config: &ChainConfig, solution: &FieldSolution) -> BalanceReport {
    assert_eq!(solution.amplitudes.len(), config.len(), "solution does not match the chain size");
    let input_power = config.a_in.norm_sqr();
    let intrinsic_loss: f64 = config
        .cavities
        .iter()
        .zip(&solution.amplitudes)
        .map(|(c, a)| c.kappa0 * a.norm_sqr() / input_power)
        .sum();
    let through_power = solution.t2();
    let drop_power = solution.d2();
    BalanceReport {
        through_power,
        drop_power,
        intrinsic_loss,
        residual: 1.0 - (through_power + drop_power + intrinsic_loss),
    }
}
