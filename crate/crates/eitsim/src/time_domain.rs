//! Time-domain relaxation of the coupled-mode equations.
//!
//! Integrating the equations of motion with a constant drive until the state
//! stops moving gives a second, dynamical route to the steady state that never
//! touches the linear solver. The integration runs in the rotating frame of
//! the drive, so detunings appear as `i*(omega - omega_i)` and the steady
//! state is a true fixed point rather than a limit cycle.
//!
//! The waveguide fields are reconstructed from the instantaneous cavity
//! amplitudes through the same input-output recurrences that underlie the
//! steady-state elimination: the bus field accumulates left to right,
//! `a_{i+1}_in = e^{i phi_i} (a_i_in + sqrt(k1_i) a_i)`, and the drop field
//! right to left, `a_i_out = e^{i phi_i} a_{i+1}_out + sqrt(k2_i) a_i`.

use crate::model::{ChainConfig, FieldSolution, ValidationResult};
use crate::steady_state::port_responses;
use num_complex::Complex64;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeDomainError {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(ValidationResult),
    #[error("bad integration settings: {0}")]
    BadSettings(String),
    #[error(
        "no steady state within {elapsed} time units (residual derivative norm {residual_norm:e})"
    )]
    NoConvergence {
        /// Ports and amplitudes of the last integrator state.
        solution: FieldSolution,
        residual_norm: f64,
        elapsed: f64,
    },
}

/// Fixed-step integration parameters.
///
/// `dt` must stay below `0.1 / kappa_max` for the integrator to be stable.
/// Convergence is declared once every amplitude has moved, relative to its
/// magnitude, by less than `rel_tol` over one slow timescale `1 / kappa_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    pub dt: f64,
    pub rel_tol: f64,
    pub max_time: f64,
}

impl IntegrationSettings {
    /// Defaults scaled to the chain: `dt = 0.01 / kappa_max`,
    /// `rel_tol = 1e-10`, `max_time = 1e4 / kappa_min`. The horizon covers
    /// the narrow-window modes, whose lifetime can exceed every per-cavity
    /// decay time by orders of magnitude.
    pub fn for_chain(config: &ChainConfig) -> Self {
        let kappa_max = config.kappa_max();
        let kappa_min = config.kappa_min_positive().unwrap_or(1.0);
        let dt = if kappa_max > 0.0 { 0.01 / kappa_max } else { 0.01 };
        Self { dt, rel_tol: 1e-10, max_time: 1e4 / kappa_min }
    }
}

/// Precomputed per-cavity coefficients for fast derivative evaluation.
pub struct Propagator {
    linear: Vec<Complex64>,
    sqrt_k1: Vec<f64>,
    sqrt_k2: Vec<f64>,
    phase: Vec<Complex64>,
    a_in: Complex64,
}

impl Propagator {
    pub fn new(config: &ChainConfig, omega: f64) -> Self {
        Self {
            linear: config
                .cavities
                .iter()
                .map(|c| Complex64::new(-c.kappa_total() / 2.0, omega - c.omega))
                .collect(),
            sqrt_k1: config.cavities.iter().map(|c| c.kappa1.sqrt()).collect(),
            sqrt_k2: config.cavities.iter().map(|c| c.kappa2.sqrt()).collect(),
            phase: config.cavities.iter().map(|c| Complex64::from_polar(1.0, c.phi_next)).collect(),
            a_in: config.a_in,
        }
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    /// Evaluates the equations of motion for the given state.
    pub fn derivative_into(&self, state: &[Complex64], out: &mut [Complex64]) {
        let n = self.linear.len();
        assert_eq!(state.len(), n);
        assert_eq!(out.len(), n);
        let mut bus = self.a_in;
        for i in 0..n {
            out[i] = self.linear[i] * state[i] - self.sqrt_k1[i] * bus;
            bus = self.phase[i] * (bus + self.sqrt_k1[i] * state[i]);
        }
        let mut incoming = Complex64::new(0.0, 0.0);
        for i in (0..n).rev() {
            out[i] -= self.sqrt_k2[i] * (self.phase[i] * incoming);
            incoming = self.phase[i] * incoming + self.sqrt_k2[i] * state[i];
        }
    }
}

/// Evaluates the equations of motion once. The auxiliary waveguide fields are
/// rebuilt from `state` via the input-output recurrences.
pub fn derivative(config: &ChainConfig, omega: f64, state: &[Complex64]) -> Vec<Complex64> {
    let propagator = Propagator::new(config, omega);
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    propagator.derivative_into(state, &mut out);
    out
}

/// Classical fixed-step fourth-order Runge-Kutta stepper around a [`Propagator`].
pub struct Integrator {
    propagator: Propagator,
    state: Vec<Complex64>,
    time: f64,
    dt: f64,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    probe: Vec<Complex64>,
}

impl Integrator {
    /// Starts from the zero state, the reproducible choice for relaxation.
    pub fn new(config: &ChainConfig, omega: f64, dt: f64) -> Self {
        let n = config.len();
        Self::with_state(config, omega, dt, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn with_state(config: &ChainConfig, omega: f64, dt: f64, state: Vec<Complex64>) -> Self {
        let n = config.len();
        assert_eq!(state.len(), n, "initial state does not match the chain size");
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Self {
            propagator: Propagator::new(config, omega),
            state,
            time: 0.0,
            dt,
            k1: zero.clone(),
            k2: zero.clone(),
            k3: zero.clone(),
            k4: zero.clone(),
            probe: zero,
        }
    }

    pub fn state(&self) -> &[Complex64] {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Total stored energy, `sum_i |a_i|^2`.
    pub fn energy(&self) -> f64 {
        self.state.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Euclidean norm of the current derivative.
    pub fn derivative_norm(&mut self) -> f64 {
        self.propagator.derivative_into(&self.state, &mut self.k1);
        self.k1.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Advances the state by one step of size `dt`.
    pub fn step(&mut self) {
        let n = self.state.len();
        let half = 0.5 * self.dt;
        self.propagator.derivative_into(&self.state, &mut self.k1);
        for i in 0..n {
            self.probe[i] = self.state[i] + half * self.k1[i];
        }
        self.propagator.derivative_into(&self.probe, &mut self.k2);
        for i in 0..n {
            self.probe[i] = self.state[i] + half * self.k2[i];
        }
        self.propagator.derivative_into(&self.probe, &mut self.k3);
        for i in 0..n {
            self.probe[i] = self.state[i] + self.dt * self.k3[i];
        }
        self.propagator.derivative_into(&self.probe, &mut self.k4);
        let sixth = self.dt / 6.0;
        for i in 0..n {
            self.state[i] +=
                sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        self.time += self.dt;
    }
}

/// Step count and simulated time spent reaching the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelaxationStats {
    pub steps: u64,
}

impl RelaxationStats {
    pub fn elapsed(&self, dt: f64) -> f64 {
        self.steps as f64 * dt
    }
}

fn check_settings(
    config: &ChainConfig,
    settings: &IntegrationSettings,
) -> Result<(), TimeDomainError> {
    for (name, value) in
        [("dt", settings.dt), ("rel_tol", settings.rel_tol), ("max_time", settings.max_time)]
    {
        if !(value.is_finite() && value > 0.0) {
            return Err(TimeDomainError::BadSettings(format!(
                "{name} must be positive and finite"
            )));
        }
    }
    let kappa_max = config.kappa_max();
    if kappa_max > 0.0 && settings.dt >= 0.1 / kappa_max {
        return Err(TimeDomainError::BadSettings(format!(
            "dt = {} violates the stability guard dt < 0.1 / kappa_max = {}",
            settings.dt,
            0.1 / kappa_max
        )));
    }
    Ok(())
}

fn converged(old: &[Complex64], current: &[Complex64], rel_tol: f64) -> bool {
    old.iter().zip(current).all(|(o, c)| (c - o).norm() / (c.norm() + 1e-30) < rel_tol)
}

/// Relaxes the chain from the zero state under constant drive until the
/// amplitudes stop moving, then reports ports exactly as the steady-state
/// solver does. Runs until `settings.max_time` at most.
pub fn integrate_to_steady_state(
    config: &ChainConfig,
    omega: f64,
    settings: &IntegrationSettings,
) -> Result<FieldSolution, TimeDomainError> {
    integrate_with_stats(config, omega, settings).map(|(solution, _)| solution)
}

/// Same as [`integrate_to_steady_state`] but also reports the step count.
pub fn integrate_with_stats(
    config: &ChainConfig,
    omega: f64,
    settings: &IntegrationSettings,
) -> Result<(FieldSolution, RelaxationStats), TimeDomainError> {
    let validation = config.validate();
    if !validation.is_valid() {
        return Err(TimeDomainError::InvalidConfig(validation));
    }
    check_settings(config, settings)?;

    let Some(kappa_min) = config.kappa_min_positive() else {
        // Nothing decays and nothing couples: the zero state is already steady.
        let amplitudes = vec![Complex64::new(0.0, 0.0); config.len()];
        let (t, d) = port_responses(config, &amplitudes);
        return Ok((FieldSolution { omega, amplitudes, t, d }, RelaxationStats { steps: 0 }));
    };

    // Compare against a snapshot at least one slow timescale old. Snapshots
    // are thinned so the ring stays small even for very stiff rate ratios.
    let lookback_steps = ((1.0 / kappa_min) / settings.dt).ceil().max(1.0) as u64;
    let stride = lookback_steps.div_ceil(512).max(1);
    let ring_len = (lookback_steps.div_ceil(stride) + 1) as usize;

    let mut integrator = Integrator::new(config, omega, settings.dt);
    let mut ring: VecDeque<Vec<Complex64>> = VecDeque::with_capacity(ring_len);
    ring.push_back(integrator.state().to_vec());

    let mut steps: u64 = 0;
    while integrator.time() < settings.max_time {
        integrator.step();
        steps += 1;
        if steps % stride == 0 {
            if ring.len() == ring_len {
                let old = ring.pop_front().unwrap();
                if converged(&old, integrator.state(), settings.rel_tol) {
                    let amplitudes = integrator.state().to_vec();
                    let (t, d) = port_responses(config, &amplitudes);
                    return Ok((
                        FieldSolution { omega, amplitudes, t, d },
                        RelaxationStats { steps },
                    ));
                }
            }
            ring.push_back(integrator.state().to_vec());
        }
    }

    let residual_norm = integrator.derivative_norm();
    let amplitudes = integrator.state().to_vec();
    let (t, d) = port_responses(config, &amplitudes);
    Err(TimeDomainError::NoConvergence {
        solution: FieldSolution { omega, amplitudes, t, d },
        residual_norm,
        elapsed: integrator.time(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{uniform_chain, ChainConfig};
    use crate::steady_state::solve_steady_state;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn critical_single() -> ChainConfig {
        uniform_chain(1, 0.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn derivative_vanishes_for_undriven_origin() {
        let mut config = uniform_chain(3, 0.1, 1.0, 2.0, 1.0).unwrap();
        config.a_in = c64(0.0, 0.0);
        let state = vec![c64(0.0, 0.0); 3];
        let out = derivative(&config, 0.4, &state);
        assert!(out.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn derivative_of_isolated_cavity_is_plain_decay() {
        let config = uniform_chain(1, 0.6, 0.0, 0.0, 1.0).unwrap();
        let omega = 0.25;
        let out = derivative(&config, omega, &[c64(1.0, 0.0)]);
        assert!((out[0] - c64(-0.3, omega)).norm() < 1e-15);
    }

    #[test]
    fn derivative_vanishes_at_the_solver_fixed_point() {
        let out = derivative(&critical_single(), 0.0, &[c64(-1.0, 0.0)]);
        assert!(out[0].norm() < 1e-15);
    }

    #[test]
    fn settings_guard_rejects_large_steps() {
        let config = critical_single();
        let settings = IntegrationSettings { dt: 0.1, rel_tol: 1e-10, max_time: 10.0 };
        assert!(matches!(
            integrate_to_steady_state(&config, 0.0, &settings),
            Err(TimeDomainError::BadSettings(_))
        ));
    }

    #[test]
    fn relaxes_critical_cavity_to_the_dark_fixed_point() {
        let config = critical_single();
        let settings = IntegrationSettings::for_chain(&config);
        let solution = integrate_to_steady_state(&config, 0.0, &settings).unwrap();
        assert!(solution.t.norm() < 1e-8);
        assert!((solution.d - c64(-1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn uncoupled_chain_stays_at_zero_and_transmits() {
        let config = uniform_chain(2, 1.0, 0.0, 0.0, 1.0).unwrap();
        let settings = IntegrationSettings::for_chain(&config);
        let (solution, stats) = integrate_with_stats(&config, 0.3, &settings).unwrap();
        assert_eq!(solution.t, c64(1.0, 0.0));
        assert_eq!(solution.d, c64(0.0, 0.0));
        assert!(solution.amplitudes.iter().all(|a| a.norm() == 0.0));
        assert!(stats.steps > 0);
    }

    #[test]
    fn fully_dark_chain_returns_immediately() {
        let config = uniform_chain(2, 0.0, 0.0, 0.0, 1.0).unwrap();
        let settings = IntegrationSettings { dt: 0.01, rel_tol: 1e-10, max_time: 1.0 };
        let (solution, stats) = integrate_with_stats(&config, 0.7, &settings).unwrap();
        assert_eq!(stats.steps, 0);
        assert_eq!(solution.t, c64(1.0, 0.0));
    }

    #[test]
    fn matches_the_solver_on_a_driven_pair() {
        let config = uniform_chain(2, 0.002, 2.0, 2.0, 1.0).unwrap();
        let settings = IntegrationSettings::for_chain(&config);
        for omega in [0.21, 0.5, 1.83] {
            let dynamic = integrate_to_steady_state(&config, omega, &settings).unwrap();
            let direct = solve_steady_state(&config, omega).unwrap();
            assert!(
                (dynamic.t - direct.t).norm() < 1e-6,
                "omega={omega} diff={:e}",
                (dynamic.t - direct.t).norm()
            );
            assert!((dynamic.d - direct.d).norm() < 1e-6);
        }
    }

    #[test]
    fn reports_non_convergence_when_the_horizon_is_too_short() {
        let config = uniform_chain(2, 0.002, 2.0, 2.0, 1.0).unwrap();
        let mut settings = IntegrationSettings::for_chain(&config);
        settings.max_time = 2.0;
        match integrate_to_steady_state(&config, 0.5, &settings) {
            Err(TimeDomainError::NoConvergence { residual_norm, elapsed, .. }) => {
                assert!(residual_norm > 0.0);
                assert!(elapsed >= 2.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
