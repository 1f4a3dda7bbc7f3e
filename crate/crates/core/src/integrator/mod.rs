//! Explicit Runge–Kutta integration of mass-action systems.

mod phased;
mod solver;
mod trajectory;

pub use phased::{run_oscillator, run_phased, OscillatorRun, PhaseSchedule, PhasedRunner};
pub use solver::{integrate, integrate_kinetics, integrate_to_equilibrium, Equilibrium, StepStats};
pub use trajectory::Trajectory;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with constant step.
    Rk4,
    /// Dormand–Prince 5(4) with adaptive step control.
    Dopri45,
}

/// Which accepted steps are stored in a [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    EveryStep,
    /// Every n-th accepted step, plus the final state.
    Stride(usize),
    /// Only the initial and final states of each integration call.
    Endpoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Step length for [`Method::Rk4`]; initial guess is chosen automatically for adaptive runs.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub clamp_negative: bool,
    pub record: Recording,
    pub max_steps: usize,
    /// Smallest step relative to `max(1, |t|)` before reporting underflow.
    pub min_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Dopri45,
            step: 1e-2,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            clamp_negative: true,
            record: Recording::EveryStep,
            max_steps: 50_000_000,
            min_step: 1e-13,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4,
            step,
            ..Self::default()
        }
    }

    pub fn with_record(mut self, record: Recording) -> Self {
        self.record = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.step) {
            return Err(Error::Config(format!("step must be positive, got {}", self.step)));
        }
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if let Recording::Stride(0) = self.record {
            return Err(Error::Config("recording stride must be at least 1".into()));
        }
        Ok(())
    }
}
