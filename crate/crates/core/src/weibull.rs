//! Three-component Weibull mixture for bathtub-shaped hazards.
//!
//! Shapes carry the ordering beta_1 < 1, beta_2 = 1, beta_3 > 1, enforced
//! through the log-barriers B(beta_1) = log beta_1 + log(1 - beta_1) and
//! B(beta_3) = log(beta_3 - 1). Rates use the lambda = alpha^{-beta}
//! parameterization; all density work happens in log space because fitted
//! wear-out components push lambda to extreme magnitudes.

use nalgebra::DMatrix;

use crate::contract::{MStepOutcome, MixtureModel};
use crate::driver::GEM_SLACK;
use crate::error::ModelError;
use crate::resp::Responsibilities;

/// Search interval for the infant-mortality shape under the constraint.
const BETA1_RANGE: (f64, f64) = (1e-3, 1.0 - 1e-3);
/// Search interval for the wear-out shape under the constraint.
const BETA3_RANGE: (f64, f64) = (1.0 + 1e-3, 200.0);
/// Search interval when the run carries no constraints (EM, DAEM).
const FREE_RANGE: (f64, f64) = (1e-3, 200.0);

/// Mixture weights, rates and shapes; `betas[1]` is pinned at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullMixParams {
    pub weights: [f64; 3],
    pub lambdas: [f64; 3],
    pub betas: [f64; 3],
}

/// Weibull log-density: log(beta lambda t^{beta-1} exp(-lambda t^beta)).
pub fn weibull_log_pdf(lambda: f64, beta: f64, t: f64) -> f64 {
    let lt = t.ln();
    beta.ln() + lambda.ln() + (beta - 1.0) * lt - (lambda.ln() + beta * lt).exp()
}

/// Weibull density f(t) = beta lambda t^{beta-1} exp(-lambda t^beta).
pub fn weibull_pdf(lambda: f64, beta: f64, t: f64) -> f64 {
    weibull_log_pdf(lambda, beta, t).exp()
}

/// Parses the plain-text failure-time format: one positive decimal per
/// line, `#`-prefixed comment lines allowed.
pub fn parse_dataset(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line
            .parse()
            .map_err(|_| format!("line {}: cannot parse `{line}` as a number", lineno + 1))?;
        if !(value > 0.0) {
            return Err(format!("line {}: failure time {value} is not positive", lineno + 1));
        }
        out.push(value);
    }
    Ok(out)
}

/// The 50 Aarset (1987) device failure times.
pub fn aarset() -> Vec<f64> {
    let data = parse_dataset(include_str!("../data/aarset.txt")).expect("bundled dataset parses");
    assert_eq!(data.len(), 50);
    data
}

/// Weibull mixture bound to a dataset of failure times.
#[derive(Debug, Clone)]
pub struct WeibullModel {
    /// Distinct times with multiplicities, ascending.
    bins: Vec<(f64, f64)>,
    ln_t: Vec<f64>,
    n: f64,
}

impl WeibullModel {
    pub fn new(times: &[f64]) -> Self {
        assert!(times.iter().all(|&t| t > 0.0));
        let mut sorted = times.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut bins: Vec<(f64, f64)> = Vec::new();
        for t in sorted {
            match bins.last_mut() {
                Some((v, c)) if *v == t => *c += 1.0,
                _ => bins.push((t, 1.0)),
            }
        }
        let ln_t = bins.iter().map(|&(t, _)| t.ln()).collect();
        Self {
            bins,
            ln_t,
            n: times.len() as f64,
        }
    }

    /// Paper-style initialization: uniform weights, lambda_j = mean(t)^{-beta_j}.
    pub fn paper_init(&self, betas: [f64; 3]) -> WeibullMixParams {
        let mean_t: f64 =
            self.bins.iter().map(|&(t, c)| t * c).sum::<f64>() / self.n;
        WeibullMixParams {
            weights: [1.0 / 3.0; 3],
            lambdas: [
                mean_t.powf(-betas[0]),
                mean_t.powf(-betas[1]),
                mean_t.powf(-betas[2]),
            ],
            betas,
        }
    }

    /// Responsibility mass and weighted log-time sum per component.
    fn component_sums(&self, resp: &Responsibilities, j: usize) -> (f64, f64) {
        let mut n_j = 0.0;
        let mut zlnt = 0.0;
        for i in 0..self.bins.len() {
            let w = resp.row_weight(i) * resp.prob(i, j);
            n_j += w;
            zlnt += w * self.ln_t[i];
        }
        (n_j, zlnt)
    }

    /// log of the profiled rate: log lambda_j(beta) = log N_j - LSE_i(log z_i + beta log t_i).
    fn profile_log_lambda(&self, resp: &Responsibilities, j: usize, beta: f64) -> f64 {
        let (n_j, _) = self.component_sums(resp, j);
        let mut max_a = f64::NEG_INFINITY;
        for i in 0..self.bins.len() {
            let z = resp.row_weight(i) * resp.prob(i, j);
            if z > 0.0 {
                max_a = max_a.max(z.ln() + beta * self.ln_t[i]);
            }
        }
        let mut sum = 0.0;
        for i in 0..self.bins.len() {
            let z = resp.row_weight(i) * resp.prob(i, j);
            if z > 0.0 {
                sum += (z.ln() + beta * self.ln_t[i] - max_a).exp();
            }
        }
        n_j.ln() - (max_a + sum.ln())
    }

    /// Profile surrogate score in beta for one component, plus barrier terms.
    ///
    /// score = N_j / beta + sum_i z_i log t_i - N_j * m(beta) where m is the
    /// softmax-weighted mean of log t under weights z_i t_i^beta.
    fn profile_score(&self, resp: &Responsibilities, j: usize, beta: f64, barrier: Barrier) -> f64 {
        let (n_j, zlnt) = self.component_sums(resp, j);
        let mut max_a = f64::NEG_INFINITY;
        for i in 0..self.bins.len() {
            let z = resp.row_weight(i) * resp.prob(i, j);
            if z > 0.0 {
                max_a = max_a.max(z.ln() + beta * self.ln_t[i]);
            }
        }
        let (mut denom, mut num) = (0.0, 0.0);
        for i in 0..self.bins.len() {
            let z = resp.row_weight(i) * resp.prob(i, j);
            if z > 0.0 {
                let w = (z.ln() + beta * self.ln_t[i] - max_a).exp();
                denom += w;
                num += w * self.ln_t[i];
            }
        }
        let mut score = n_j / beta + zlnt - n_j * num / denom;
        score += match barrier {
            Barrier::None => 0.0,
            Barrier::Infant(xi) => xi * (1.0 / beta - 1.0 / (1.0 - beta)),
            Barrier::WearOut(xi) => xi / (beta - 1.0),
        };
        score
    }

    /// Root of the strictly decreasing profile score on (lo, hi): safeguarded
    /// Newton with a bisection fallback. Same-signed endpoints pin the
    /// boundary maximizer.
    fn solve_beta(
        &self,
        resp: &Responsibilities,
        j: usize,
        range: (f64, f64),
        barrier: Barrier,
    ) -> Result<f64, ModelError> {
        let (mut lo, mut hi) = range;
        let f_lo = self.profile_score(resp, j, lo, barrier);
        let f_hi = self.profile_score(resp, j, hi, barrier);
        if f_lo <= 0.0 && f_hi <= 0.0 {
            return Ok(lo);
        }
        if f_lo >= 0.0 && f_hi >= 0.0 {
            return Ok(hi);
        }
        let mut beta = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.profile_score(resp, j, beta, barrier);
            if f > 0.0 {
                lo = beta;
            } else {
                hi = beta;
            }
            if f.abs() < 1e-13 {
                return Ok(beta);
            }
            if hi - lo < 1e-12 {
                return Ok(0.5 * (lo + hi));
            }
            // numeric slope for the Newton step; the score is strictly
            // decreasing so any nonpositive slope estimate falls back to
            // bisection
            let h = 1e-6 * (1.0 + beta.abs());
            let slope = (self.profile_score(resp, j, beta + h, barrier) - f) / h;
            let newton = beta - f / slope;
            beta = if slope < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(0.5 * (lo + hi))
    }

    fn log_densities(&self, p: &WeibullMixParams) -> Vec<[f64; 3]> {
        self.bins
            .iter()
            .map(|&(t, _)| {
                [
                    weibull_log_pdf(p.lambdas[0], p.betas[0], t),
                    weibull_log_pdf(p.lambdas[1], p.betas[1], t),
                    weibull_log_pdf(p.lambdas[2], p.betas[2], t),
                ]
            })
            .collect()
    }

    /// Partial derivative of the surrogate in the shape of component j at
    /// the given parameters (Table-style stationarity report).
    pub fn shape_gradient(&self, p: &WeibullMixParams, resp: &Responsibilities, j: usize) -> f64 {
        let (n_j, zlnt) = self.component_sums(resp, j);
        let ln_lambda = p.lambdas[j].ln();
        let mut weighted = 0.0;
        for i in 0..self.bins.len() {
            let z = resp.row_weight(i) * resp.prob(i, j);
            if z > 0.0 {
                weighted += z * (ln_lambda + p.betas[j] * self.ln_t[i]).exp() * self.ln_t[i];
            }
        }
        n_j / p.betas[j] + zlnt - weighted
    }

    /// Surrogate gradients in (beta_1, beta_3) for stationarity reporting.
    pub fn report_shape_gradients(
        &self,
        p: &WeibullMixParams,
        resp: &Responsibilities,
    ) -> (f64, f64) {
        (
            self.shape_gradient(p, resp, 0),
            self.shape_gradient(p, resp, 2),
        )
    }
}

#[derive(Clone, Copy)]
enum Barrier {
    None,
    Infant(f64),
    WearOut(f64),
}

impl MixtureModel for WeibullModel {
    type Params = WeibullMixParams;

    fn n_rows(&self) -> usize {
        self.bins.len()
    }

    fn n_latent(&self) -> usize {
        3
    }

    fn n_obs(&self) -> f64 {
        self.n
    }

    fn observed_loglik(&self, p: &WeibullMixParams) -> f64 {
        let dens = self.log_densities(p);
        let mut total = 0.0;
        for (i, &(_, c)) in self.bins.iter().enumerate() {
            let lw: Vec<f64> = (0..3).map(|j| p.weights[j].ln() + dens[i][j]).collect();
            let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            total += c * (m + lw.iter().map(|v| (v - m).exp()).sum::<f64>().ln());
        }
        total
    }

    fn annealed_responsibilities(
        &self,
        p: &WeibullMixParams,
        r: f64,
    ) -> Result<Responsibilities, ModelError> {
        let dens = self.log_densities(p);
        let mut log_unnorm = DMatrix::zeros(self.bins.len(), 3);
        let mut weights = Vec::with_capacity(self.bins.len());
        for (i, &(_, c)) in self.bins.iter().enumerate() {
            for j in 0..3 {
                log_unnorm[(i, j)] = r * (p.weights[j].ln() + dens[i][j]);
            }
            weights.push(c);
        }
        Responsibilities::from_log_unnormalized(log_unnorm, weights)
    }

    fn surrogate_value(&self, p: &WeibullMixParams, resp: &Responsibilities) -> f64 {
        let dens = self.log_densities(p);
        let mut q = 0.0;
        for (i, &(_, c)) in self.bins.iter().enumerate() {
            for j in 0..3 {
                let w = resp.prob(i, j);
                if w > 0.0 {
                    q += c * w * (p.weights[j].ln() + dens[i][j]);
                }
            }
        }
        q
    }

    fn barrier_value(&self, p: &WeibullMixParams) -> Option<f64> {
        let b1 = p.betas[0];
        let b3 = p.betas[2];
        (b1 > 0.0 && b1 < 1.0 && b3 > 1.0).then(|| b1.ln() + (1.0 - b1).ln() + (b3 - 1.0).ln())
    }

    fn surrogate_gradient(&self, p: &WeibullMixParams, resp: &Responsibilities) -> Vec<f64> {
        vec![
            self.shape_gradient(p, resp, 0),
            self.shape_gradient(p, resp, 2),
        ]
    }

    fn barrier_gradient(&self, p: &WeibullMixParams) -> Vec<f64> {
        vec![
            1.0 / p.betas[0] - 1.0 / (1.0 - p.betas[0]),
            1.0 / (p.betas[2] - 1.0),
        ]
    }

    fn m_step(
        &self,
        current: &WeibullMixParams,
        resp: &Responsibilities,
        xi: Option<f64>,
        damping_grid: &[f64],
    ) -> Result<MStepOutcome<WeibullMixParams>, ModelError> {
        let mut n_j = [0.0; 3];
        for j in 0..3 {
            n_j[j] = self.component_sums(resp, j).0;
            if n_j[j] < 1e-8 {
                return Err(ModelError::EmptyComponent {
                    component: j,
                    mass: n_j[j],
                });
            }
        }
        let weights = [n_j[0] / self.n, n_j[1] / self.n, n_j[2] / self.n];
        let (b1, b3) = match xi {
            None => (
                self.solve_beta(resp, 0, FREE_RANGE, Barrier::None)?,
                self.solve_beta(resp, 2, FREE_RANGE, Barrier::None)?,
            ),
            Some(xi) => (
                self.solve_beta(resp, 0, BETA1_RANGE, Barrier::Infant(xi))?,
                self.solve_beta(resp, 2, BETA3_RANGE, Barrier::WearOut(xi))?,
            ),
        };
        let betas = [b1, 1.0, b3];
        let lambdas_for = |betas: &[f64; 3]| -> [f64; 3] {
            [
                self.profile_log_lambda(resp, 0, betas[0]).exp(),
                self.profile_log_lambda(resp, 1, betas[1]).exp(),
                self.profile_log_lambda(resp, 2, betas[2]).exp(),
            ]
        };
        let proposed = WeibullMixParams {
            weights,
            lambdas: lambdas_for(&betas),
            betas,
        };
        match xi {
            None => {
                if !self.is_valid(&proposed) {
                    return Err(ModelError::InvalidParams {
                        reason: format!("M-step left the valid region: {proposed:?}"),
                    });
                }
                Ok(MStepOutcome::Candidate(proposed))
            }
            Some(xi) => {
                // Damping on the shapes, with rates reprofiled at each level.
                let bq = |p: &WeibullMixParams| {
                    self.barrier_value(p)
                        .map(|b| self.surrogate_value(p, resp) + xi * b)
                };
                let Some(bq_cur) = bq(current) else {
                    return Err(ModelError::InvalidParams {
                        reason: "damping from an infeasible point".into(),
                    });
                };
                for &alpha in damping_grid {
                    let betas = [
                        (1.0 - alpha) * current.betas[0] + alpha * proposed.betas[0],
                        1.0,
                        (1.0 - alpha) * current.betas[2] + alpha * proposed.betas[2],
                    ];
                    let cand = WeibullMixParams {
                        weights,
                        lambdas: lambdas_for(&betas),
                        betas,
                    };
                    if !self.is_feasible(&cand) {
                        continue;
                    }
                    if let Some(bq_cand) = bq(&cand) {
                        if bq_cand >= bq_cur - GEM_SLACK {
                            return Ok(MStepOutcome::Candidate(cand));
                        }
                    }
                }
                Ok(MStepOutcome::Rejected)
            }
        }
    }

    fn is_valid(&self, p: &WeibullMixParams) -> bool {
        let simplex = (p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12
            && p.weights.iter().all(|&w| w > 0.0);
        simplex
            && p.lambdas.iter().all(|&l| l > 0.0 && l.is_finite())
            && p.betas.iter().all(|&b| b > 0.0 && b.is_finite())
            && p.betas[1] == 1.0
    }

    fn is_feasible(&self, p: &WeibullMixParams) -> bool {
        self.is_valid(p) && p.betas[0] < 1.0 && p.betas[2] > 1.0
    }

    fn xi_init(&self, p: &WeibullMixParams, resp: &Responsibilities, tau: f64) -> f64 {
        let g1 = self.shape_gradient(p, resp, 0).abs();
        let g3 = self.shape_gradient(p, resp, 2).abs();
        let headroom1 = p.betas[0].min(1.0 - p.betas[0]);
        tau * (g1 * headroom1).min(g3 * (p.betas[2] - 1.0))
    }

    fn param_delta(&self, a: &WeibullMixParams, b: &WeibullMixParams) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..3 {
            d = d.max((a.weights[j] - b.weights[j]).abs());
            d = d.max((a.betas[j] - b.betas[j]).abs());
            d = d.max((a.lambdas[j] - b.lambdas[j]).abs());
        }
        d
    }

    fn constrained_grad_norms(&self, p: &WeibullMixParams, resp: &Responsibilities) -> Vec<f64> {
        vec![
            self.shape_gradient(p, resp, 0).abs(),
            self.shape_gradient(p, resp, 2).abs(),
        ]
    }
}
