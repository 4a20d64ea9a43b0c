//! Numeric probes backing the framework's theoretical claims: monotonicity
//! audits, KL-rate and KL-limit trends, the latent-effect envelope, and
//! finite-difference gradient validation.

use crate::contract::{annealed_posterior, delta_dkl, MixtureModel};
use crate::error::CoreError;

/// Outcome of one probe: the input grid, measured values, a fitted summary
/// statistic and the pass flag against the stated criterion.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub name: &'static str,
    pub inputs: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted: f64,
    pub criterion: String,
    pub pass: bool,
    /// Indices flagged by the probe (e.g. monotonicity violations).
    pub flagged: Vec<usize>,
}

impl ProbeReport {
    /// Rows in the `probe,input,value,criterion,pass` schema.
    pub fn csv_rows(&self) -> Vec<String> {
        self.inputs
            .iter()
            .zip(&self.values)
            .map(|(input, value)| {
                format!(
                    "{},{:.17e},{:.17e},{},{}",
                    self.name, input, value, self.criterion, self.pass
                )
            })
            .collect()
    }
}

/// Tolerance below which a likelihood decrease counts as a violation.
pub const MONOTONICITY_TOL: f64 = 1e-10;

/// Flags every index where the observed log-likelihood drops by more than
/// the tolerance. Adaptive traces must produce zero flags.
pub fn monotonicity_audit(loglik: &[f64]) -> ProbeReport {
    let mut flagged = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 1..loglik.len() {
        let dip = loglik[i - 1] - loglik[i];
        if dip > MONOTONICITY_TOL {
            flagged.push(i);
        }
        worst = worst.max(dip);
    }
    ProbeReport {
        name: "monotonicity",
        inputs: (0..loglik.len()).map(|i| i as f64).collect(),
        values: loglik.to_vec(),
        fitted: worst,
        criterion: format!("no dip exceeds {MONOTONICITY_TOL:.0e}"),
        pass: flagged.is_empty(),
        flagged,
    }
}

/// KL divergence between the annealed posteriors of two parameter points at
/// the same level r (exact discrete sum).
pub fn annealed_kl<M: MixtureModel>(
    model: &M,
    theta0: &M::Params,
    theta1: &M::Params,
    r: f64,
) -> Result<f64, CoreError> {
    let w0 = annealed_posterior(model, theta0, r)?;
    let w1 = annealed_posterior(model, theta1, r)?;
    let mut total = 0.0;
    for i in 0..model.n_rows() {
        for k in 0..model.n_latent() {
            let p = w0.prob(i, k);
            if p == 0.0 {
                continue;
            }
            if w1.prob(i, k) == 0.0 {
                return Err(CoreError::NumericalSupport { row: i, state: k });
            }
            total += w0.row_weight(i) * p * (w0.log_prob(i, k) - w1.log_prob(i, k));
        }
    }
    Ok(total)
}

/// Measures (1/r) D_KL(P_r, theta0 || P_r, theta1) on a grid near zero and
/// fits the log-log slope; linear vanishing shows as slope >= 0.8.
pub fn kl_rate_probe<M: MixtureModel>(
    model: &M,
    theta0: &M::Params,
    theta1: &M::Params,
    r_grid: &[f64],
) -> Result<ProbeReport, CoreError> {
    assert!(r_grid.windows(2).all(|w| w[1] > w[0]));
    let mut values = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        values.push(annealed_kl(model, theta0, theta1, r)? / r);
    }
    let degenerate = values.iter().all(|v| v.abs() < 1e-300);
    let slope = if degenerate {
        0.0
    } else {
        log_log_slope(r_grid, &values)
    };
    Ok(ProbeReport {
        name: "kl_rate",
        inputs: r_grid.to_vec(),
        values,
        fitted: slope,
        criterion: "log-log slope >= 0.8 (identically zero passes)".into(),
        pass: degenerate || slope >= 0.8,
        flagged: Vec::new(),
    })
}

/// Measures Delta D_KL(theta0 || theta1, r) on a grid approaching 1 and
/// checks convergence to the plain divergence: final gap below 1e-6.
pub fn dkl_limit_probe<M: MixtureModel>(
    model: &M,
    theta0: &M::Params,
    theta1: &M::Params,
    r_grid: &[f64],
) -> Result<ProbeReport, CoreError> {
    assert!(r_grid.windows(2).all(|w| w[1] > w[0]));
    let limit = delta_dkl(model, theta0, theta1, 1.0)?;
    let mut gaps = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        gaps.push((delta_dkl(model, theta0, theta1, r)? - limit).abs());
    }
    let final_gap = *gaps.last().expect("nonempty grid");
    let shrinking = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(ProbeReport {
        name: "dkl_limit",
        inputs: r_grid.to_vec(),
        values: gaps,
        fitted: final_gap,
        criterion: "gap shrinks along the grid and ends below 1e-6".into(),
        pass: shrinking && final_gap < 1e-6,
        flagged: Vec::new(),
    })
}

/// Latent-effect term G(theta, theta0 | r) = Q_r(theta | theta0) - l_o(theta),
/// computed exactly for a discrete latent.
pub fn latent_effect<M: MixtureModel>(
    model: &M,
    theta: &M::Params,
    theta0: &M::Params,
    r: f64,
) -> Result<f64, CoreError> {
    let resp = annealed_posterior(model, theta0, r)?;
    Ok(model.surrogate_value(theta, &resp) - model.observed_loglik(theta))
}

/// Envelope of |G| over a sample of parameter points, per annealing level.
/// The bound of the theory applies to an upper envelope, so the pass
/// criterion is that the envelope is nonincreasing as r decreases on (0, 1/2].
pub fn latent_effect_probe<M: MixtureModel>(
    model: &M,
    theta_samples: &[M::Params],
    theta0: &M::Params,
    r_grid: &[f64],
) -> Result<ProbeReport, CoreError> {
    assert!(r_grid.windows(2).all(|w| w[1] > w[0]));
    assert!(r_grid.iter().all(|&r| r > 0.0 && r <= 0.5));
    let mut envelope = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let mut worst: f64 = 0.0;
        for theta in theta_samples {
            worst = worst.max(latent_effect(model, theta, theta0, r)?.abs());
        }
        envelope.push(worst);
    }
    // grid ascends, so nonincreasing-as-r-decreases means ascending values
    let pass = envelope.windows(2).all(|w| w[0] <= w[1] + 1e-9);
    Ok(ProbeReport {
        name: "latent_effect",
        inputs: r_grid.to_vec(),
        values: envelope.clone(),
        fitted: *envelope.last().expect("nonempty grid"),
        criterion: "envelope nonincreasing as r decreases (1e-9 slack)".into(),
        pass,
        flagged: Vec::new(),
    })
}

/// Central finite differences over a step ladder against an analytic
/// gradient; returns the worst per-coordinate best-step relative error.
pub fn grad_fd_check<F: Fn(&[f64]) -> f64>(
    f: F,
    point: &[f64],
    analytic: &[f64],
    step_ladder: &[f64],
) -> f64 {
    assert_eq!(point.len(), analytic.len());
    let mut worst: f64 = 0.0;
    let mut probe = point.to_vec();
    for (i, &g) in analytic.iter().enumerate() {
        let mut best = f64::INFINITY;
        for &h in step_ladder {
            let step = h * (1.0 + point[i].abs());
            probe[i] = point[i] + step;
            let up = f(&probe);
            probe[i] = point[i] - step;
            let down = f(&probe);
            probe[i] = point[i];
            let fd = (up - down) / (2.0 * step);
            let scale = g.abs().max(fd.abs()).max(1e-12);
            best = best.min((fd - g).abs() / scale);
        }
        worst = worst.max(best);
    }
    worst
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
