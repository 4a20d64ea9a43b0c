//! Zero-inflated Poisson model with a log-barrier lower bound on the
//! inflation probability.
//!
//! Latent state 0 is the structural zero, state 1 the Poisson component.
//! Observations with equal counts share a row with a multiplicity, so the
//! E- and M-steps cost O(distinct values) regardless of the sample size.

use nalgebra::DMatrix;

use crate::contract::{MStepOutcome, MixtureModel};
use crate::driver::GEM_SLACK;
use crate::error::ModelError;
use crate::resp::Responsibilities;

/// Inflation probability and Poisson mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipParams {
    /// Structural-zero probability, in (pi_min, 1) when constrained.
    pub pi: f64,
    /// Poisson mean, > 0 (unconstrained).
    pub lambda: f64,
}

/// ZIP pmf: P(0) = pi + (1-pi) e^{-lambda}, P(y) = (1-pi) lambda^y e^{-lambda} / y!.
pub fn zip_pmf(params: ZipParams, y: u64) -> f64 {
    let ZipParams { pi, lambda } = params;
    let pois = (y as f64 * lambda.ln() - lambda - ln_factorial(y)).exp();
    if y == 0 {
        pi + (1.0 - pi) * pois
    } else {
        (1.0 - pi) * pois
    }
}

fn ln_factorial(y: u64) -> f64 {
    (1..=y).map(|k| (k as f64).ln()).sum()
}

/// ZIP model bound to a dataset of counts.
#[derive(Debug, Clone)]
pub struct ZipModel {
    /// Distinct observed counts with multiplicities, ascending.
    bins: Vec<(u64, f64)>,
    /// Cached ln y! per bin.
    ln_fact: Vec<f64>,
    /// Lower constraint on pi.
    pi_min: f64,
    n: f64,
    /// Sum of count * multiplicity over positive bins.
    sum_pos: f64,
}

impl ZipModel {
    pub fn new(data: &[u64], pi_min: f64) -> Self {
        let mut sorted = data.to_vec();
        sorted.sort_unstable();
        let mut bins: Vec<(u64, f64)> = Vec::new();
        for y in sorted {
            match bins.last_mut() {
                Some((v, c)) if *v == y => *c += 1.0,
                _ => bins.push((y, 1.0)),
            }
        }
        let ln_fact = bins.iter().map(|&(y, _)| ln_factorial(y)).collect();
        let n = data.len() as f64;
        let sum_pos = bins.iter().map(|&(y, c)| y as f64 * c).sum();
        Self {
            bins,
            ln_fact,
            pi_min,
            n,
            sum_pos,
        }
    }

    pub fn pi_min(&self) -> f64 {
        self.pi_min
    }

    /// Structural-zero log-weight and Poisson log-weight of the zero bin.
    fn zero_log_joint(&self, p: &ZipParams) -> (f64, f64) {
        (p.pi.ln(), (1.0 - p.pi).ln() - p.lambda)
    }

    /// M-step pi update: root of the barrier-augmented score on (pi_min, 1).
    ///
    /// The score sum(Z)/pi - sum(1-Z)/(1-pi) + xi/(pi - pi_min) is strictly
    /// decreasing in pi given fixed responsibilities, so bisection is safe.
    fn solve_pi(&self, mass_z: f64, mass_pois: f64, xi: f64) -> Result<f64, ModelError> {
        let score = |p: f64| mass_z / p - mass_pois / (1.0 - p) + xi / (p - self.pi_min);
        let mut lo = self.pi_min + 1e-12;
        let mut hi = 1.0 - 1e-12;
        if score(lo) <= 0.0 {
            return Ok(lo);
        }
        if score(hi) >= 0.0 {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                return Ok(0.5 * (lo + hi));
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl MixtureModel for ZipModel {
    type Params = ZipParams;

    fn n_rows(&self) -> usize {
        self.bins.len()
    }

    fn n_latent(&self) -> usize {
        2
    }

    fn n_obs(&self) -> f64 {
        self.n
    }

    fn observed_loglik(&self, p: &ZipParams) -> f64 {
        let mut total = 0.0;
        for (i, &(y, c)) in self.bins.iter().enumerate() {
            let lp = if y == 0 {
                let (a, b) = self.zero_log_joint(p);
                // log(e^a + e^b) with max subtraction
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln()
            } else {
                (1.0 - p.pi).ln() + y as f64 * p.lambda.ln() - p.lambda - self.ln_fact[i]
            };
            total += c * lp;
        }
        total
    }

    fn annealed_responsibilities(
        &self,
        p: &ZipParams,
        r: f64,
    ) -> Result<Responsibilities, ModelError> {
        let mut log_unnorm = DMatrix::zeros(self.bins.len(), 2);
        let mut weights = Vec::with_capacity(self.bins.len());
        for (i, &(y, c)) in self.bins.iter().enumerate() {
            if y == 0 {
                let (a, b) = self.zero_log_joint(p);
                log_unnorm[(i, 0)] = r * a;
                log_unnorm[(i, 1)] = r * b;
            } else {
                log_unnorm[(i, 0)] = f64::NEG_INFINITY;
                log_unnorm[(i, 1)] =
                    r * ((1.0 - p.pi).ln() + y as f64 * p.lambda.ln() - p.lambda - self.ln_fact[i]);
            }
            weights.push(c);
        }
        Responsibilities::from_log_unnormalized(log_unnorm, weights)
    }

    fn surrogate_value(&self, p: &ZipParams, resp: &Responsibilities) -> f64 {
        let mut q = 0.0;
        for (i, &(y, c)) in self.bins.iter().enumerate() {
            let z = resp.prob(i, 0);
            let pois = (1.0 - p.pi).ln() + y as f64 * p.lambda.ln() - p.lambda - self.ln_fact[i];
            q += c * (if z > 0.0 { z * p.pi.ln() } else { 0.0 } + (1.0 - z) * pois);
        }
        q
    }

    fn barrier_value(&self, p: &ZipParams) -> Option<f64> {
        (p.pi > self.pi_min).then(|| (p.pi - self.pi_min).ln())
    }

    fn surrogate_gradient(&self, p: &ZipParams, resp: &Responsibilities) -> Vec<f64> {
        vec![grad_pi(resp, p.pi)]
    }

    fn barrier_gradient(&self, p: &ZipParams) -> Vec<f64> {
        vec![1.0 / (p.pi - self.pi_min)]
    }

    fn m_step(
        &self,
        current: &ZipParams,
        resp: &Responsibilities,
        xi: Option<f64>,
        damping_grid: &[f64],
    ) -> Result<MStepOutcome<ZipParams>, ModelError> {
        let mass_z = resp.state_mass(0);
        let mass_pois = resp.state_mass(1);
        if mass_pois < 1e-12 {
            return Err(ModelError::LambdaUndefined);
        }
        let lambda = self.sum_pos / mass_pois;
        if !(lambda > 0.0) {
            return Err(ModelError::InvalidParams {
                reason: "lambda update is not positive (no positive counts observed)".into(),
            });
        }
        let cand = match xi {
            None => ZipParams {
                pi: mass_z / self.n,
                lambda,
            },
            Some(xi) => {
                let pi = self.solve_pi(mass_z, mass_pois, xi)?;
                let cand = ZipParams { pi, lambda };
                // Exact coordinate maximizers make the candidate pass at
                // alpha = 1; the damping screen is kept for uniformity.
                let bq = |p: &ZipParams| {
                    self.surrogate_value(p, resp) + xi * self.barrier_value(p).unwrap_or(f64::NEG_INFINITY)
                };
                let bq_cur = bq(current);
                let mut chosen = None;
                for &alpha in damping_grid {
                    let damped = ZipParams {
                        pi: (1.0 - alpha) * current.pi + alpha * cand.pi,
                        lambda: (1.0 - alpha) * current.lambda + alpha * cand.lambda,
                    };
                    if self.is_feasible(&damped) && bq(&damped) >= bq_cur - GEM_SLACK {
                        chosen = Some(damped);
                        break;
                    }
                }
                match chosen {
                    Some(c) => c,
                    None => return Ok(MStepOutcome::Rejected),
                }
            }
        };
        if !self.is_valid(&cand) {
            return Err(ModelError::InvalidParams {
                reason: format!("M-step produced pi={} lambda={}", cand.pi, cand.lambda),
            });
        }
        Ok(MStepOutcome::Candidate(cand))
    }

    fn is_valid(&self, p: &ZipParams) -> bool {
        p.pi > 0.0 && p.pi < 1.0 && p.lambda > 0.0 && p.lambda.is_finite()
    }

    fn is_feasible(&self, p: &ZipParams) -> bool {
        self.is_valid(p) && p.pi > self.pi_min
    }

    fn xi_init(&self, p: &ZipParams, resp: &Responsibilities, tau: f64) -> f64 {
        tau * grad_pi(resp, p.pi).abs() * (p.pi - self.pi_min)
    }

    fn param_delta(&self, a: &ZipParams, b: &ZipParams) -> f64 {
        (a.pi - b.pi).abs().max((a.lambda - b.lambda).abs())
    }

    fn constrained_grad_norms(&self, p: &ZipParams, resp: &Responsibilities) -> Vec<f64> {
        vec![grad_pi(resp, p.pi).abs()]
    }
}

/// Surrogate score in pi: sum(Z)/pi - sum(1-Z)/(1-pi), with Z the
/// structural-zero responsibility.
pub fn grad_pi(resp: &Responsibilities, pi: f64) -> f64 {
    resp.state_mass(0) / pi - resp.state_mass(1) / (1.0 - pi)
}
