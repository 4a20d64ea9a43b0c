//! The model capability set the drivers run against, plus the generic
//! operations built on it (annealed posterior, barrier surrogate, KL terms).

use crate::error::{CoreError, ModelError};
use crate::resp::Responsibilities;

/// Result of one M-step attempt.
#[derive(Debug, Clone)]
pub enum MStepOutcome<P> {
    /// A candidate satisfying feasibility and the GEM inequality.
    Candidate(P),
    /// No damping level produced an acceptable candidate; the caller keeps
    /// the current point and advances the homotopy.
    Rejected,
}

/// Capabilities every mixture model provides to the drivers.
///
/// A model instance is bound to its dataset at construction and immutable
/// afterwards. Observations with identical values may be grouped into rows
/// with a multiplicity; all sums below are weighted accordingly.
pub trait MixtureModel {
    type Params: Clone + std::fmt::Debug;

    /// Number of observation rows (bins).
    fn n_rows(&self) -> usize;

    /// Number of latent states per observation.
    fn n_latent(&self) -> usize;

    /// Total observation count (sum of row multiplicities).
    fn n_obs(&self) -> f64;

    /// Observed-data log-likelihood in nats.
    fn observed_loglik(&self, params: &Self::Params) -> f64;

    /// Annealed latent posterior at level `r`; the standard posterior at r = 1.
    fn annealed_responsibilities(
        &self,
        params: &Self::Params,
        r: f64,
    ) -> Result<Responsibilities, ModelError>;

    /// Expected complete-data log-likelihood under the given responsibilities.
    fn surrogate_value(&self, params: &Self::Params, resp: &Responsibilities) -> f64;

    /// Log-barrier value; `None` when the point is on or past the boundary.
    fn barrier_value(&self, params: &Self::Params) -> Option<f64>;

    /// Gradient of the surrogate with respect to the constrained coordinates.
    fn surrogate_gradient(&self, params: &Self::Params, resp: &Responsibilities) -> Vec<f64>;

    /// Gradient of the barrier with respect to the constrained coordinates.
    fn barrier_gradient(&self, params: &Self::Params) -> Vec<f64>;

    /// One M-step from `current` under responsibilities `resp`.
    ///
    /// `xi` is `None` for the unconstrained variants (EM, DAEM): updates are
    /// closed-form maximizers with no feasibility screening beyond validity.
    /// With `Some(xi)` the barrier-augmented surrogate is maximized and the
    /// result is screened through the damping grid for feasibility and the
    /// GEM inequality.
    fn m_step(
        &self,
        current: &Self::Params,
        resp: &Responsibilities,
        xi: Option<f64>,
        damping_grid: &[f64],
    ) -> Result<MStepOutcome<Self::Params>, ModelError>;

    /// Whether the distribution is well-defined at `params`.
    fn is_valid(&self, params: &Self::Params) -> bool;

    /// Whether `params` lies strictly inside the constraint set.
    fn is_feasible(&self, params: &Self::Params) -> bool;

    /// Model-specific barrier-weight initialization at dominance level `tau`.
    fn xi_init(&self, params: &Self::Params, resp: &Responsibilities, tau: f64) -> f64;

    /// Largest absolute coordinate change between two points.
    fn param_delta(&self, a: &Self::Params, b: &Self::Params) -> f64;

    /// Surrogate gradient norms per constrained coordinate block, for traces.
    fn constrained_grad_norms(&self, params: &Self::Params, resp: &Responsibilities) -> Vec<f64>;
}

/// Annealed posterior with row validation.
///
/// At r = 1 this is the standard E-step; smaller r flattens each row.
pub fn annealed_posterior<M: MixtureModel>(
    model: &M,
    theta: &M::Params,
    r: f64,
) -> Result<Responsibilities, CoreError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(CoreError::InvalidConfig {
            reason: format!("annealing level {r} outside (0, 1]"),
        });
    }
    let resp = model.annealed_responsibilities(theta, r)?;
    debug_assert!(resp.max_row_sum_error() < 1e-12);
    Ok(resp)
}

/// Barrier-augmented surrogate Q_r(theta | theta0) + xi * B(theta).
///
/// With xi = 0 the barrier is not evaluated and the plain annealed surrogate
/// is returned. An infeasible theta under xi > 0 is an explicit error, never
/// a silent non-finite number.
pub fn barrier_surrogate<M: MixtureModel>(
    model: &M,
    theta: &M::Params,
    theta0: &M::Params,
    r: f64,
    xi: f64,
) -> Result<f64, CoreError> {
    let resp = annealed_posterior(model, theta0, r)?;
    let q = model.surrogate_value(theta, &resp);
    if xi == 0.0 {
        return Ok(q);
    }
    match model.barrier_value(theta) {
        Some(b) if b.is_finite() => Ok(q + xi * b),
        _ => Err(CoreError::Infeasible),
    }
}

/// KL change term of the acceptance machinery.
///
/// For a discrete latent this is
/// sum_i sum_k P_r(k | x_i, theta0) * log(P(k | x_i, theta0) / P(k | x_i, theta1)),
/// where the inner posteriors use r = 1. May be negative for r < 1; at r = 1
/// it is the (nonnegative) KL divergence between standard posteriors.
pub fn delta_dkl<M: MixtureModel>(
    model: &M,
    theta0: &M::Params,
    theta1: &M::Params,
    r: f64,
) -> Result<f64, CoreError> {
    let wr = annealed_posterior(model, theta0, r)?;
    let w0 = annealed_posterior(model, theta0, 1.0)?;
    let w1 = annealed_posterior(model, theta1, 1.0)?;
    let mut total = 0.0;
    for i in 0..model.n_rows() {
        let weight = wr.row_weight(i);
        for k in 0..model.n_latent() {
            let mass = wr.prob(i, k);
            if mass == 0.0 {
                continue;
            }
            let l0 = w0.log_prob(i, k);
            let l1 = w1.log_prob(i, k);
            if l1 == f64::NEG_INFINITY || l0 == f64::NEG_INFINITY {
                return Err(CoreError::NumericalSupport { row: i, state: k });
            }
            total += weight * mass * (l0 - l1);
        }
    }
    Ok(total)
}

/// Lower bound delta(theta1, theta0) = eta * D_KL(theta0 || theta1).
///
/// Uses the r = 1 divergence, clamped at zero so rounding noise near a fixed
/// point cannot produce a negative bound.
pub fn kl_lower_bound<M: MixtureModel>(
    model: &M,
    theta0: &M::Params,
    theta1: &M::Params,
    eta: f64,
) -> Result<f64, CoreError> {
    if !(0.0..1.0).contains(&eta) {
        return Err(CoreError::InvalidConfig {
            reason: format!("eta {eta} outside [0, 1)"),
        });
    }
    let dkl = delta_dkl(model, theta0, theta1, 1.0)?;
    Ok((eta * dkl).max(0.0))
}

/// Generic barrier-weight initialization: tau * ||grad Q_r|| / ||grad B||.
pub fn xi_init_generic(grad_q_norm: f64, grad_b_norm: f64, tau: f64) -> Result<f64, CoreError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(CoreError::InvalidConfig {
            reason: format!("tau {tau} outside (0, 1)"),
        });
    }
    if grad_b_norm == 0.0 {
        return Err(CoreError::ZeroBarrierGradient);
    }
    Ok(tau * grad_q_norm / grad_b_norm)
}
