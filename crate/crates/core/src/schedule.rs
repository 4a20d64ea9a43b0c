//! Hyperparameter schedules and driver configuration.

use crate::error::CoreError;

/// The five algorithm variants the drivers support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Standard EM: r fixed at 1, no barrier.
    Em,
    /// Deterministic annealing EM: r schedule, no barrier.
    Daem,
    /// Barrier EM: r fixed at 1, xi schedule.
    BarrierEm,
    /// Dual homotopy: r schedule up, xi schedule down.
    Dhem,
    /// Acceptance-rule-driven dual homotopy with monotone observed likelihood.
    AdaptiveDhem,
}

impl Variant {
    /// Whether the variant enforces the model's constraint set via barriers.
    pub fn constrained(self) -> bool {
        matches!(self, Variant::BarrierEm | Variant::Dhem | Variant::AdaptiveDhem)
    }

    /// Whether the annealing level starts below 1.
    pub fn annealed(self) -> bool {
        matches!(self, Variant::Daem | Variant::Dhem | Variant::AdaptiveDhem)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Em => "em",
            Variant::Daem => "daem",
            Variant::BarrierEm => "barrier",
            Variant::Dhem => "dhem",
            Variant::AdaptiveDhem => "adaptive",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "em" => Ok(Variant::Em),
            "daem" => Ok(Variant::Daem),
            "barrier" => Ok(Variant::BarrierEm),
            "dhem" => Ok(Variant::Dhem),
            "adaptive" => Ok(Variant::AdaptiveDhem),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Annealing-level progression for the scheduled variants.
#[derive(Debug, Clone)]
pub enum RGrowth {
    /// r <- min(1, r * factor) per outer level.
    Geometric(f64),
    /// Explicit increasing grid of levels; the last entry should be 1.
    Grid(Vec<f64>),
}

/// Schedules, acceptance constants and convergence tolerances.
#[derive(Debug, Clone)]
pub struct ScheduleConfig {
    /// Initial annealing level, in (0, 1].
    pub r_init: f64,
    /// Level-to-level growth of r for DAEM/DHEM, and for the adaptive driver
    /// once the inner iteration at the current level has converged.
    pub r_growth: RGrowth,
    /// Growth applied when the adaptive first acceptance rule fails.
    pub r_retry_growth: f64,
    /// Multiplicative decay of xi per outer level (barrier EM / DHEM).
    pub xi_decay: f64,
    /// Dominance level of the surrogate over the barrier at initialization.
    pub tau: f64,
    /// Scaling of the KL lower bound, in [0, 1).
    pub eta: f64,
    /// Total outer-iteration budget across all levels.
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute parameter change.
    pub param_tol: f64,
    /// Convergence threshold on the observed log-likelihood change.
    pub loglik_tol: f64,
    /// Decreasing damping factors, first element 1.
    pub damping_grid: Vec<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            r_init: 0.1,
            r_growth: RGrowth::Geometric(1.5),
            r_retry_growth: 1.2,
            xi_decay: 0.5,
            tau: 0.5,
            eta: 0.1,
            max_iter: 2000,
            param_tol: 1e-6,
            loglik_tol: 1e-8,
            damping_grid: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |reason: String| Err(CoreError::InvalidConfig { reason });
        if !(self.r_init > 0.0 && self.r_init <= 1.0) {
            return bad(format!("r_init {} outside (0, 1]", self.r_init));
        }
        match &self.r_growth {
            RGrowth::Geometric(f) if *f <= 1.0 => {
                return bad(format!("r growth factor {f} must exceed 1"));
            }
            RGrowth::Grid(grid) => {
                if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("r grid must be nonempty and strictly increasing".into());
                }
                if grid.iter().any(|r| *r <= 0.0 || *r > 1.0) {
                    return bad("r grid entries must lie in (0, 1]".into());
                }
            }
            _ => {}
        }
        if self.r_retry_growth <= 1.0 {
            return bad(format!("r_retry_growth {} must exceed 1", self.r_retry_growth));
        }
        if !(self.xi_decay > 0.0 && self.xi_decay < 1.0) {
            return bad(format!("xi_decay {} outside (0, 1)", self.xi_decay));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau {} outside (0, 1)", self.tau));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return bad(format!("eta {} outside [0, 1)", self.eta));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.param_tol > 0.0 && self.loglik_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.damping_grid.first() != Some(&1.0) {
            return bad("damping grid must start at 1".into());
        }
        if self
            .damping_grid
            .windows(2)
            .any(|w| w[1] >= w[0] || w[1] <= 0.0)
        {
            return bad("damping grid must be strictly decreasing and positive".into());
        }
        Ok(())
    }

    /// Next annealing level after `r`, capped at 1.
    pub fn next_r(&self, r: f64) -> f64 {
        match &self.r_growth {
            RGrowth::Geometric(f) => (r * f).min(1.0),
            RGrowth::Grid(grid) => grid
                .iter()
                .copied()
                .find(|&g| g > r + 1e-15)
                .unwrap_or(1.0)
                .min(1.0),
        }
    }
}
