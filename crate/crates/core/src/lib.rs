//! Constrained expectation-maximization via a dual homotopy: deterministic
//! annealing in the E-step and log-barrier penalization in the M-step, with
//! an adaptive variant whose acceptance rules certify a monotone
//! observed-data likelihood.
//!
//! The crate provides generic drivers over a model contract plus three
//! bundled models: a Gaussian mixture with component-separation constraints,
//! a zero-inflated Poisson with a lower bound on the inflation probability,
//! and a three-component Weibull mixture for bathtub-shaped hazards.

pub mod contract;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod gmm;
pub mod resp;
pub mod schedule;
pub mod state;
pub mod weibull;
pub mod zip;

pub use contract::{
    annealed_posterior, barrier_surrogate, delta_dkl, kl_lower_bound, xi_init_generic,
    MStepOutcome, MixtureModel,
};
pub use driver::{acceptance_rule_1, acceptance_rule_2_and_shrink, run_variant, GEM_SLACK};
pub use error::{CoreError, ModelError};
pub use resp::Responsibilities;
pub use schedule::{RGrowth, ScheduleConfig, Variant};
pub use state::{
    AcceptanceOutcome, AcceptanceReason, HomotopyState, RunOutcome, Termination, TraceRecord,
};
