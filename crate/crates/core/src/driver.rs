//! Generic algorithm drivers: EM, DAEM, barrier EM, DHEM and adaptive DHEM.

use crate::contract::{
    annealed_posterior, delta_dkl, kl_lower_bound, MStepOutcome, MixtureModel,
};
use crate::error::CoreError;
use crate::resp::Responsibilities;
use crate::schedule::{ScheduleConfig, Variant};
use crate::state::{AcceptanceOutcome, AcceptanceReason, HomotopyState, RunOutcome, Termination, TraceRecord};

/// Slack for generalized-EM comparisons on computed floats.
pub const GEM_SLACK: f64 = 1e-10;

/// Relative floor below which a scheduled barrier weight is treated as spent.
const XI_FLOOR_REL: f64 = 1e-14;

/// First acceptance rule: the KL change must dominate the lower bound.
/// Exact comparison, no epsilon slack.
pub fn acceptance_rule_1(delta_dkl_value: f64, delta_bound: f64) -> bool {
    delta_dkl_value >= delta_bound
}

/// Second acceptance rule with the barrier-weight reduction.
///
/// Returns `(held, new_xi)`: `held` is true when the rule is satisfied at the
/// current weight (including the vacuous |dB| = 0 case); otherwise the weight
/// is reduced to min(xi, delta / |dB|) so the rule holds at `new_xi`.
pub fn acceptance_rule_2_and_shrink(
    delta_bound: f64,
    xi: f64,
    delta_barrier_abs: f64,
) -> Result<(bool, f64), CoreError> {
    if delta_bound < 0.0 {
        return Err(CoreError::InvalidBound { value: delta_bound });
    }
    if delta_barrier_abs == 0.0 || delta_bound >= xi * delta_barrier_abs {
        return Ok((true, xi));
    }
    Ok((false, xi.min(delta_bound / delta_barrier_abs)))
}

/// Runs one variant from a feasible initial point.
///
/// EM is DHEM with r fixed at 1 and xi fixed at 0; DAEM anneals with no
/// barrier; barrier EM keeps r = 1 and decays xi; DHEM runs both fixed
/// schedules; adaptive DHEM is the acceptance-rule loop.
pub fn run_variant<M: MixtureModel>(
    model: &M,
    variant: Variant,
    init: M::Params,
    config: &ScheduleConfig,
) -> Result<RunOutcome<M::Params>, CoreError> {
    config.validate()?;
    if !model.is_valid(&init) {
        return Err(CoreError::InfeasibleInit {
            reason: "initial parameters are not a valid distribution".into(),
        });
    }
    if variant.constrained() && !model.is_feasible(&init) {
        return Err(CoreError::InfeasibleInit {
            reason: "initial parameters violate the constraint set".into(),
        });
    }
    match variant {
        Variant::AdaptiveDhem => run_adaptive(model, init, config),
        _ => run_scheduled(model, variant, init, config),
    }
}

struct Loop<P> {
    state: HomotopyState<P>,
    trace: Vec<TraceRecord>,
}

impl<P: Clone> Loop<P> {
    fn new<M: MixtureModel<Params = P>>(model: &M, theta: P, r: f64, xi: f64) -> Self {
        Self {
            state: HomotopyState {
                loglik: model.observed_loglik(&theta),
                theta,
                r,
                xi,
                iter: 0,
            },
            trace: Vec::new(),
        }
    }

    fn record<M: MixtureModel<Params = P>>(
        &mut self,
        model: &M,
        resp: &Responsibilities,
        accepted: bool,
        deltas: Option<(f64, f64)>,
    ) {
        self.trace.push(TraceRecord {
            iter: self.state.iter,
            r: self.state.r,
            xi: self.state.xi,
            loglik: self.state.loglik,
            delta_dkl: deltas.map(|d| d.0),
            delta_barrier: deltas.map(|d| d.1),
            grad_norms: model.constrained_grad_norms(&self.state.theta, resp),
            accepted,
        });
    }

    fn finish(self, termination: Termination) -> RunOutcome<P> {
        RunOutcome {
            loglik: self.state.loglik,
            iterations: self.state.iter,
            final_r: self.state.r,
            final_xi: self.state.xi,
            termination,
            params: self.state.theta,
            trace: self.trace,
        }
    }
}

fn run_scheduled<M: MixtureModel>(
    model: &M,
    variant: Variant,
    init: M::Params,
    config: &ScheduleConfig,
) -> Result<RunOutcome<M::Params>, CoreError> {
    let constrained = variant.constrained();
    let r0 = if variant.annealed() { config.r_init } else { 1.0 };
    let xi0 = if constrained {
        let resp0 = annealed_posterior(model, &init, r0)?;
        model.xi_init(&init, &resp0, config.tau)
    } else {
        0.0
    };
    let xi_floor = XI_FLOOR_REL * (1.0 + xi0);

    let mut lp = Loop::new(model, init, r0, xi0);
    // Converged point of the previous (r, xi) level, for the outer
    // interior-point stopping test of barrier EM / DHEM.
    let mut prev_level: Option<(M::Params, f64)> = None;
    let mut termination = Termination::IterationCap;

    while lp.state.iter < config.max_iter {
        lp.state.iter += 1;
        let resp = annealed_posterior(model, &lp.state.theta, lp.state.r)?;
        let xi_arg = constrained.then_some(lp.state.xi);
        let outcome = model.m_step(&lp.state.theta, &resp, xi_arg, &config.damping_grid)?;
        let cand = match outcome {
            MStepOutcome::Candidate(c) => c,
            MStepOutcome::Rejected => {
                lp.record(model, &resp, false, None);
                // A rejected update advances the homotopy (larger r, smaller
                // xi); a rejection at the terminal level ends the run.
                let mut advanced = false;
                if variant.annealed() && lp.state.r < 1.0 {
                    lp.state.r = config.next_r(lp.state.r);
                    advanced = true;
                }
                if constrained && lp.state.xi > xi_floor {
                    lp.state.xi *= config.xi_decay;
                    advanced = true;
                }
                if advanced {
                    continue;
                }
                termination = Termination::CertificateStop;
                break;
            }
        };
        let new_loglik = model.observed_loglik(&cand);
        let dp = model.param_delta(&lp.state.theta, &cand);
        let dl = (new_loglik - lp.state.loglik).abs();
        lp.state.theta = cand;
        lp.state.loglik = new_loglik;
        debug_assert!(if constrained {
            model.is_feasible(&lp.state.theta)
        } else {
            model.is_valid(&lp.state.theta)
        });
        lp.record(model, &resp, true, None);

        if dp < config.param_tol && dl < config.loglik_tol {
            // Inner loop at this (r, xi) level has converged.
            let at_final_r = !variant.annealed() || lp.state.r >= 1.0;
            match variant {
                Variant::Em => {
                    termination = Termination::Converged;
                    break;
                }
                Variant::Daem => {
                    if at_final_r {
                        termination = Termination::Converged;
                        break;
                    }
                    lp.state.r = config.next_r(lp.state.r);
                }
                Variant::BarrierEm | Variant::Dhem => {
                    // Outer stop: consecutive level solutions agree, or the
                    // barrier weight is numerically spent.
                    if at_final_r {
                        let outer_done = match &prev_level {
                            Some((p, l)) => {
                                model.param_delta(p, &lp.state.theta) < config.param_tol
                                    && (lp.state.loglik - l).abs() < config.loglik_tol
                            }
                            None => false,
                        };
                        if outer_done || lp.state.xi <= xi_floor {
                            termination = Termination::Converged;
                            break;
                        }
                        prev_level = Some((lp.state.theta.clone(), lp.state.loglik));
                    }
                    if variant.annealed() && lp.state.r < 1.0 {
                        lp.state.r = config.next_r(lp.state.r);
                    }
                    lp.state.xi *= config.xi_decay;
                }
                Variant::AdaptiveDhem => unreachable!(),
            }
        }
    }

    Ok(lp.finish(termination))
}

fn run_adaptive<M: MixtureModel>(
    model: &M,
    init: M::Params,
    config: &ScheduleConfig,
) -> Result<RunOutcome<M::Params>, CoreError> {
    let r0 = config.r_init;
    let resp0 = annealed_posterior(model, &init, r0)?;
    let xi0 = model.xi_init(&init, &resp0, config.tau);
    let xi_floor = XI_FLOOR_REL * (1.0 + xi0);

    let mut lp = Loop::new(model, init, r0, xi0);
    let mut termination = Termination::IterationCap;

    while lp.state.iter < config.max_iter {
        lp.state.iter += 1;
        let (r, xi) = (lp.state.r, lp.state.xi);
        let resp = annealed_posterior(model, &lp.state.theta, r)?;

        // Candidate generation; a stalled M-step or a support-losing
        // candidate advances the homotopy like a first-rule failure.
        let cand = match model.m_step(&lp.state.theta, &resp, Some(xi), &config.damping_grid)? {
            MStepOutcome::Candidate(c) => c,
            MStepOutcome::Rejected => {
                let out = reject(config, r, xi, AcceptanceReason::InfeasibleCandidate);
                lp.record(model, &resp, false, None);
                lp.state.r = out.new_r;
                lp.state.xi = out.new_xi;
                if out.new_r > r || out.new_xi > xi_floor {
                    continue;
                }
                termination = Termination::CertificateStop;
                break;
            }
        };
        let dd = match delta_dkl(model, &lp.state.theta, &cand, r) {
            Ok(v) => v,
            Err(CoreError::NumericalSupport { .. }) => {
                let out = reject(config, r, xi, AcceptanceReason::InfeasibleCandidate);
                lp.record(model, &resp, false, None);
                lp.state.r = out.new_r;
                lp.state.xi = out.new_xi;
                if out.new_r > r || out.new_xi > xi_floor {
                    continue;
                }
                termination = Termination::CertificateStop;
                break;
            }
            Err(e) => return Err(e),
        };
        let bound = kl_lower_bound(model, &lp.state.theta, &cand, config.eta)?;

        let outcome = if !acceptance_rule_1(dd, bound) {
            reject(config, r, xi, AcceptanceReason::Rule1Failed)
        } else {
            let b_cur = model.barrier_value(&lp.state.theta).ok_or(CoreError::Infeasible)?;
            let b_cand = model.barrier_value(&cand).ok_or(CoreError::Infeasible)?;
            let db = b_cand - b_cur;
            let (held, new_xi) = acceptance_rule_2_and_shrink(bound, xi, db.abs())?;
            if !held {
                // The candidate was built at the old weight; it must still
                // satisfy the GEM inequality at the reduced weight for the
                // certificate to apply.
                let bq_cand = model.surrogate_value(&cand, &resp) + new_xi * b_cand;
                let bq_cur = model.surrogate_value(&lp.state.theta, &resp) + new_xi * b_cur;
                if bq_cand < bq_cur - GEM_SLACK {
                    AcceptanceOutcome {
                        accepted: false,
                        reason: AcceptanceReason::GemViolated,
                        new_r: r,
                        new_xi,
                    }
                } else {
                    AcceptanceOutcome {
                        accepted: true,
                        reason: AcceptanceReason::Rule2AdjustedXi,
                        new_r: r,
                        new_xi,
                    }
                }
            } else {
                AcceptanceOutcome {
                    accepted: true,
                    reason: AcceptanceReason::Accepted,
                    new_r: r,
                    new_xi,
                }
            }
        };
        debug_assert!(outcome.new_xi <= xi);

        if !outcome.accepted {
            lp.record(model, &resp, false, Some((dd, f64::NAN)));
            lp.state.r = outcome.new_r;
            lp.state.xi = outcome.new_xi;
            if outcome.reason == AcceptanceReason::Rule1Failed && outcome.new_r <= r {
                termination = Termination::CertificateStop;
                break;
            }
            continue;
        }

        let b_cur = model.barrier_value(&lp.state.theta).unwrap_or(f64::NAN);
        let b_cand = model.barrier_value(&cand).unwrap_or(f64::NAN);
        let new_loglik = model.observed_loglik(&cand);
        let dp = model.param_delta(&lp.state.theta, &cand);
        let dl = (new_loglik - lp.state.loglik).abs();
        lp.state.theta = cand;
        lp.state.loglik = new_loglik;
        lp.state.xi = outcome.new_xi;
        debug_assert!(model.is_feasible(&lp.state.theta));
        lp.record(model, &resp, true, Some((dd, b_cand - b_cur)));

        if dp < config.param_tol && dl < config.loglik_tol {
            if lp.state.r >= 1.0 {
                termination = Termination::Converged;
                break;
            }
            // Converged at an intermediate level: ride the homotopy upward.
            lp.state.r = config.next_r(lp.state.r);
        }
    }

    Ok(lp.finish(termination))
}

/// Shared handling of non-accepted adaptive iterations: anneal harder below
/// r = 1 and loosen the barrier when the M-step itself stalled.
fn reject(config: &ScheduleConfig, r: f64, xi: f64, reason: AcceptanceReason) -> AcceptanceOutcome {
    let new_r = if r < 1.0 {
        (r * config.r_retry_growth).min(1.0)
    } else {
        r
    };
    let new_xi = if reason == AcceptanceReason::InfeasibleCandidate {
        xi * config.xi_decay
    } else {
        xi
    };
    AcceptanceOutcome {
        accepted: false,
        reason,
        new_r,
        new_xi,
    }
}
