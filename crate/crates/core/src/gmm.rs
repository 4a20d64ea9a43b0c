//! Gaussian mixture model with component-separation constraints.
//!
//! The barrier is component-wise: while component k is updated, the term
//! log(d_k^2(mu_k) - delta) with the squared Mahalanobis separation
//! d_k^2(mu_k) = sum_{l != k} (mu_k - mu_l)' Sigma_k^{-1} (mu_k - mu_l)
//! keeps its mean away from the others. Means solve a nonlinear first-order
//! condition via a frozen-coefficient Gauss-Seidel sweep, covariances update
//! in closed form, and a backtracking damping screen restores feasibility
//! and the GEM inequality.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use crate::contract::{MStepOutcome, MixtureModel};
use crate::driver::GEM_SLACK;
use crate::error::ModelError;
use crate::resp::Responsibilities;

const LN_2PI: f64 = 1.8378770664093453;

/// Weights, means and covariances of a K-component Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

impl GmmParams {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }
}

/// Responsibility-weighted counts and first moments.
#[derive(Debug, Clone)]
pub struct GmmSuffStats {
    /// N_k = sum_i Z_ik.
    pub n_k: Vec<f64>,
    /// s_k = sum_i Z_ik x_i.
    pub s_k: Vec<DVector<f64>>,
}

/// GMM bound to a dataset, with the separation threshold.
#[derive(Debug, Clone)]
pub struct GmmModel {
    data: Vec<DVector<f64>>,
    delta_sep: f64,
    k: usize,
}

const MIN_EIG: f64 = 1e-10;

impl GmmModel {
    pub fn new(data: Vec<DVector<f64>>, n_components: usize, delta_sep: f64) -> Self {
        assert!(!data.is_empty());
        Self {
            data,
            delta_sep,
            k: n_components,
        }
    }

    pub fn data(&self) -> &[DVector<f64>] {
        &self.data
    }

    pub fn delta_sep(&self) -> f64 {
        self.delta_sep
    }

    /// Sufficient statistics under the given responsibilities.
    pub fn suff_stats(&self, resp: &Responsibilities) -> GmmSuffStats {
        let d = self.data[0].len();
        let mut n_k = vec![0.0; self.k];
        let mut s_k = vec![DVector::zeros(d); self.k];
        for (i, x) in self.data.iter().enumerate() {
            for k in 0..self.k {
                let w = resp.prob(i, k);
                n_k[k] += w;
                s_k[k].axpy(w, x, 1.0);
            }
        }
        GmmSuffStats { n_k, s_k }
    }

    fn log_densities(&self, p: &GmmParams) -> Result<Vec<Vec<f64>>, ModelError> {
        let d = p.dim() as f64;
        let mut per_comp = Vec::with_capacity(self.k);
        for k in 0..self.k {
            let chol = Cholesky::new(p.covs[k].clone())
                .ok_or(ModelError::SingularCovariance { component: k })?;
            let ln_det = 2.0 * chol.l().diagonal().map(f64::ln).sum();
            let mut col = Vec::with_capacity(self.data.len());
            for x in &self.data {
                let diff = x - &p.means[k];
                let y = chol.solve(&diff);
                let maha = diff.dot(&y);
                col.push(-0.5 * (d * LN_2PI + ln_det + maha));
            }
            per_comp.push(col);
        }
        Ok(per_comp)
    }
}

/// Squared Mahalanobis separation of component k from the others.
pub fn mahalanobis_separation(p: &GmmParams, k: usize) -> Result<f64, ModelError> {
    let chol = Cholesky::new(p.covs[k].clone())
        .ok_or(ModelError::SingularCovariance { component: k })?;
    let mut total = 0.0;
    for l in 0..p.n_components() {
        if l == k {
            continue;
        }
        let diff = &p.means[k] - &p.means[l];
        total += diff.dot(&chol.solve(&diff));
    }
    Ok(total)
}

/// Separation with explicit means (used mid-sweep before params are rebuilt).
fn separation_at(
    mu_k: &DVector<f64>,
    means: &[DVector<f64>],
    k: usize,
    chol_k: &Cholesky<f64, nalgebra::Dyn>,
) -> f64 {
    let mut total = 0.0;
    for (l, mu_l) in means.iter().enumerate() {
        if l == k {
            continue;
        }
        let diff = mu_k - mu_l;
        total += diff.dot(&chol_k.solve(&diff));
    }
    total
}

/// Solves the first-order condition for one component mean:
/// 0 = s_k - N_k mu + xi * 2/(d_k^2(mu) - delta) * sum_{l != k} (mu - mu_l).
///
/// The barrier coefficient is frozen at the current iterate, turning the
/// equation linear; the fixed point is iterated to 1e-10 in at most 100
/// sweeps. With xi = 0 this returns s_k / N_k exactly.
pub fn solve_mu_k(
    p: &GmmParams,
    stats: &GmmSuffStats,
    means: &[DVector<f64>],
    k: usize,
    xi: f64,
    delta_sep: f64,
) -> Result<DVector<f64>, ModelError> {
    let n_k = stats.n_k[k];
    if xi == 0.0 {
        return Ok(&stats.s_k[k] / n_k);
    }
    let chol = Cholesky::new(p.covs[k].clone())
        .ok_or(ModelError::SingularCovariance { component: k })?;
    let others: DVector<f64> = means
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != k)
        .fold(DVector::zeros(means[0].len()), |acc, (_, m)| acc + m);
    let n_others = (means.len() - 1) as f64;
    let mut mu = means[k].clone();
    for _ in 0..100 {
        let d2 = separation_at(&mu, means, k, &chol);
        let gap = d2 - delta_sep;
        if gap <= 0.0 {
            return Err(ModelError::SolverFailure {
                what: "gmm mean fixed point",
                iterations: 100,
                last: gap,
            });
        }
        let c = 2.0 * xi / gap;
        let denom = n_k - c * n_others;
        if denom.abs() < 1e-12 {
            return Err(ModelError::SolverFailure {
                what: "gmm mean fixed point",
                iterations: 100,
                last: denom,
            });
        }
        let mu_new = (&stats.s_k[k] - &others * c) / denom;
        let step = (&mu_new - &mu).amax();
        mu = mu_new;
        if step < 1e-10 {
            return Ok(mu);
        }
    }
    Err(ModelError::SolverFailure {
        what: "gmm mean fixed point",
        iterations: 100,
        last: (&stats.s_k[k] / n_k - &mu).amax(),
    })
}

/// Closed-form covariance update for one component.
pub fn update_sigma_k(
    resp: &Responsibilities,
    data: &[DVector<f64>],
    mu: &DVector<f64>,
    k: usize,
) -> Result<DMatrix<f64>, ModelError> {
    let n_k: f64 = (0..data.len()).map(|i| resp.prob(i, k)).sum();
    if n_k < 1e-8 {
        return Err(ModelError::EmptyComponent {
            component: k,
            mass: n_k,
        });
    }
    let d = mu.len();
    let mut sigma = DMatrix::zeros(d, d);
    for (i, x) in data.iter().enumerate() {
        let diff = x - mu;
        sigma.ger(resp.prob(i, k), &diff, &diff, 1.0);
    }
    sigma /= n_k;
    // symmetrize against accumulation asymmetry
    let sym = (&sigma + sigma.transpose()) * 0.5;
    Ok(sym)
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// First damping level whose interpolated means (with recomputed
/// covariances) are feasible and satisfy the GEM inequality; `None` when the
/// whole grid fails and the caller should keep the current point.
pub fn backtracking_damping(
    model: &GmmModel,
    current: &GmmParams,
    proposed: &GmmParams,
    resp: &Responsibilities,
    xi: f64,
    damping_grid: &[f64],
) -> Result<Option<GmmParams>, ModelError> {
    let bq_current = model.surrogate_value(current, resp)
        + xi * model.barrier_value(current).ok_or_else(|| ModelError::InvalidParams {
            reason: "damping from an infeasible point".into(),
        })?;
    for &alpha in damping_grid {
        let means: Vec<DVector<f64>> = current
            .means
            .iter()
            .zip(&proposed.means)
            .map(|(old, new)| old * (1.0 - alpha) + new * alpha)
            .collect();
        let mut covs = Vec::with_capacity(model.k);
        let mut degenerate = false;
        for k in 0..model.k {
            match update_sigma_k(resp, &model.data, &means[k], k) {
                Ok(s) => covs.push(s),
                Err(ModelError::EmptyComponent { .. }) => {
                    degenerate = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if degenerate {
            continue;
        }
        let cand = GmmParams {
            weights: proposed.weights.clone(),
            means,
            covs,
        };
        if !model.is_feasible(&cand) {
            continue;
        }
        if let Some(b) = model.barrier_value(&cand) {
            let bq = model.surrogate_value(&cand, resp) + xi * b;
            if bq >= bq_current - GEM_SLACK {
                return Ok(Some(cand));
            }
        }
    }
    Ok(None)
}

/// Estimation errors after optimal component relabeling:
/// (L1 on weights, summed L2 on means, summed Frobenius on covariances).
pub fn gmm_error_metrics(est: &GmmParams, truth: &GmmParams) -> (f64, f64, f64) {
    let k = truth.n_components();
    assert_eq!(est.n_components(), k);
    let mut best: Option<(f64, Vec<usize>)> = None;
    permutations(k, &mut |perm| {
        let mu_err: f64 = (0..k)
            .map(|j| (&est.means[perm[j]] - &truth.means[j]).norm())
            .sum();
        if best.as_ref().map_or(true, |(e, _)| mu_err < *e) {
            best = Some((mu_err, perm.to_vec()));
        }
    });
    let (mu_err, perm) = best.expect("at least one permutation");
    let pi_err: f64 = (0..k)
        .map(|j| (est.weights[perm[j]] - truth.weights[j]).abs())
        .sum();
    let sigma_err: f64 = (0..k)
        .map(|j| (&est.covs[perm[j]] - &truth.covs[j]).norm())
        .sum();
    (pi_err, mu_err, sigma_err)
}

fn permutations(k: usize, visit: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    heap_permute(&mut idx, k, visit);
}

fn heap_permute(idx: &mut Vec<usize>, m: usize, visit: &mut impl FnMut(&[usize])) {
    if m == 1 {
        visit(idx);
        return;
    }
    for i in 0..m {
        heap_permute(idx, m - 1, visit);
        if m % 2 == 0 {
            idx.swap(i, m - 1);
        } else {
            idx.swap(0, m - 1);
        }
    }
}

/// Barrier-weight initialization from the component-wise gradient balance:
/// (tau / 2) * min_k ||s_k - N_k mu_k|| * (d_k^2 - delta) / ||u_k||,
/// skipping components whose pairwise mean sum u_k vanishes.
pub fn gmm_xi_init(
    p: &GmmParams,
    stats: &GmmSuffStats,
    tau: f64,
    delta_sep: f64,
) -> Result<f64, ModelError> {
    let k_total = p.n_components();
    let mut best: Option<f64> = None;
    for k in 0..k_total {
        let u_k: DVector<f64> = (0..k_total)
            .filter(|&l| l != k)
            .fold(DVector::zeros(p.dim()), |acc, l| {
                acc + (&p.means[k] - &p.means[l])
            });
        let u_norm = u_k.norm();
        if u_norm == 0.0 {
            continue;
        }
        let d2 = mahalanobis_separation(p, k)?;
        let grad_norm = (&stats.s_k[k] - &p.means[k] * stats.n_k[k]).norm();
        let value = grad_norm * (d2 - delta_sep) / u_norm;
        best = Some(best.map_or(value, |b: f64| b.min(value)));
    }
    match best {
        Some(v) => Ok(tau / 2.0 * v),
        None => Err(ModelError::InvalidParams {
            reason: "every component has a vanishing pairwise mean sum".into(),
        }),
    }
}

/// Draws K distinct data points as means, the overall sample covariance for
/// every component, and uniform weights; redrawn until feasible.
pub fn random_init<R: Rng>(
    model: &GmmModel,
    rng: &mut R,
    max_tries: usize,
) -> Result<GmmParams, ModelError> {
    let n = model.data.len();
    let k = model.k;
    let cov = sample_covariance(&model.data);
    for _ in 0..max_tries {
        let mut picks = Vec::with_capacity(k);
        while picks.len() < k {
            let i = rng.gen_range(0..n);
            if !picks.contains(&i) {
                picks.push(i);
            }
        }
        let cand = GmmParams {
            weights: vec![1.0 / k as f64; k],
            means: picks.iter().map(|&i| model.data[i].clone()).collect(),
            covs: vec![cov.clone(); k],
        };
        if model.is_feasible(&cand) {
            return Ok(cand);
        }
    }
    Err(ModelError::InvalidParams {
        reason: format!("no feasible random initialization in {max_tries} draws"),
    })
}

/// Mean-centered covariance of the whole dataset.
pub fn sample_covariance(data: &[DVector<f64>]) -> DMatrix<f64> {
    let n = data.len() as f64;
    let d = data[0].len();
    let mean = data.iter().fold(DVector::zeros(d), |acc, x| acc + x) / n;
    let mut cov = DMatrix::zeros(d, d);
    for x in data {
        let diff = x - &mean;
        cov.ger(1.0 / n, &diff, &diff, 1.0);
    }
    (&cov + cov.transpose()) * 0.5
}

impl MixtureModel for GmmModel {
    type Params = GmmParams;

    fn n_rows(&self) -> usize {
        self.data.len()
    }

    fn n_latent(&self) -> usize {
        self.k
    }

    fn n_obs(&self) -> f64 {
        self.data.len() as f64
    }

    fn observed_loglik(&self, p: &GmmParams) -> f64 {
        let dens = match self.log_densities(p) {
            Ok(d) => d,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut total = 0.0;
        for i in 0..self.data.len() {
            let mut row_max = f64::NEG_INFINITY;
            for k in 0..self.k {
                row_max = row_max.max(p.weights[k].ln() + dens[k][i]);
            }
            let sum: f64 = (0..self.k)
                .map(|k| (p.weights[k].ln() + dens[k][i] - row_max).exp())
                .sum();
            total += row_max + sum.ln();
        }
        total
    }

    fn annealed_responsibilities(
        &self,
        p: &GmmParams,
        r: f64,
    ) -> Result<Responsibilities, ModelError> {
        let dens = self.log_densities(p)?;
        let mut log_unnorm = DMatrix::zeros(self.data.len(), self.k);
        for i in 0..self.data.len() {
            for k in 0..self.k {
                log_unnorm[(i, k)] = r * (p.weights[k].ln() + dens[k][i]);
            }
        }
        Responsibilities::from_log_unnormalized(log_unnorm, vec![1.0; self.data.len()])
    }

    fn surrogate_value(&self, p: &GmmParams, resp: &Responsibilities) -> f64 {
        let dens = match self.log_densities(p) {
            Ok(d) => d,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut q = 0.0;
        for i in 0..self.data.len() {
            for k in 0..self.k {
                let w = resp.prob(i, k);
                if w > 0.0 {
                    q += w * (p.weights[k].ln() + dens[k][i]);
                }
            }
        }
        q
    }

    fn barrier_value(&self, p: &GmmParams) -> Option<f64> {
        let mut total = 0.0;
        for k in 0..self.k {
            let d2 = mahalanobis_separation(p, k).ok()?;
            if d2 <= self.delta_sep {
                return None;
            }
            total += (d2 - self.delta_sep).ln();
        }
        Some(total)
    }

    fn surrogate_gradient(&self, p: &GmmParams, resp: &Responsibilities) -> Vec<f64> {
        let stats = self.suff_stats(resp);
        let mut out = Vec::with_capacity(self.k * p.dim());
        for k in 0..self.k {
            let resid = &stats.s_k[k] - &p.means[k] * stats.n_k[k];
            let grad = Cholesky::new(p.covs[k].clone())
                .map(|c| c.solve(&resid))
                .unwrap_or(resid);
            out.extend(grad.iter().copied());
        }
        out
    }

    fn barrier_gradient(&self, p: &GmmParams) -> Vec<f64> {
        // Component-wise convention: d B[k] / d mu_k, other components fixed.
        let mut out = Vec::with_capacity(self.k * p.dim());
        for k in 0..self.k {
            let d2 = match mahalanobis_separation(p, k) {
                Ok(v) => v,
                Err(_) => {
                    out.extend(std::iter::repeat(f64::NAN).take(p.dim()));
                    continue;
                }
            };
            let chol = Cholesky::new(p.covs[k].clone()).expect("separation succeeded");
            let mut grad = DVector::zeros(p.dim());
            for l in 0..self.k {
                if l == k {
                    continue;
                }
                let diff = &p.means[k] - &p.means[l];
                grad += chol.solve(&diff) * 2.0;
            }
            grad /= d2 - self.delta_sep;
            out.extend(grad.iter().copied());
        }
        out
    }

    fn m_step(
        &self,
        current: &GmmParams,
        resp: &Responsibilities,
        xi: Option<f64>,
        damping_grid: &[f64],
    ) -> Result<MStepOutcome<GmmParams>, ModelError> {
        let stats = self.suff_stats(resp);
        for (k, &n_k) in stats.n_k.iter().enumerate() {
            if n_k < 1e-8 {
                return Err(ModelError::EmptyComponent {
                    component: k,
                    mass: n_k,
                });
            }
        }
        let n = self.n_obs();
        let weights: Vec<f64> = stats.n_k.iter().map(|&nk| nk / n).collect();

        // Gauss-Seidel pass over the means, each against the latest others.
        // A component whose barrier coefficient overwhelms its data pull has
        // no stable frozen-coefficient solution; it keeps its current mean
        // for this sweep and unsticks once the others move away. A sweep
        // where no component moves is a rejection so the caller advances
        // the homotopy instead of declaring convergence.
        let mut means = current.means.clone();
        let mut solved_any = false;
        for k in 0..self.k {
            let solved = match solve_mu_k(current, &stats, &means, k, xi.unwrap_or(0.0), self.delta_sep)
            {
                Ok(mu) => {
                    solved_any = true;
                    mu
                }
                Err(ModelError::SolverFailure { .. }) if xi.is_some() => current.means[k].clone(),
                Err(e) => return Err(e),
            };
            means[k] = solved;
        }
        if !solved_any {
            return Ok(MStepOutcome::Rejected);
        }
        let mut covs = Vec::with_capacity(self.k);
        for k in 0..self.k {
            covs.push(update_sigma_k(resp, &self.data, &means[k], k)?);
        }
        let proposed = GmmParams {
            weights,
            means,
            covs,
        };

        match xi {
            None => {
                if !self.is_valid(&proposed) {
                    return Err(ModelError::SingularCovariance {
                        component: (0..self.k)
                            .find(|&k| min_eigenvalue(&proposed.covs[k]) <= MIN_EIG)
                            .unwrap_or(0),
                    });
                }
                Ok(MStepOutcome::Candidate(proposed))
            }
            Some(xi) => {
                match backtracking_damping(self, current, &proposed, resp, xi, damping_grid)? {
                    Some(cand) => Ok(MStepOutcome::Candidate(cand)),
                    None => Ok(MStepOutcome::Rejected),
                }
            }
        }
    }

    fn is_valid(&self, p: &GmmParams) -> bool {
        let simplex =
            (p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.weights.iter().all(|&w| w > 0.0);
        simplex
            && p.means.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && p.covs.iter().all(|c| min_eigenvalue(c) > MIN_EIG)
    }

    fn is_feasible(&self, p: &GmmParams) -> bool {
        self.is_valid(p)
            && (0..self.k).all(|k| {
                mahalanobis_separation(p, k).map_or(false, |d2| d2 > self.delta_sep)
            })
    }

    fn xi_init(&self, p: &GmmParams, resp: &Responsibilities, tau: f64) -> f64 {
        let stats = self.suff_stats(resp);
        gmm_xi_init(p, &stats, tau, self.delta_sep).unwrap_or(0.0)
    }

    fn param_delta(&self, a: &GmmParams, b: &GmmParams) -> f64 {
        let mut delta: f64 = 0.0;
        for k in 0..self.k {
            delta = delta.max((a.weights[k] - b.weights[k]).abs());
            delta = delta.max((&a.means[k] - &b.means[k]).amax());
            delta = delta.max((&a.covs[k] - &b.covs[k]).amax());
        }
        delta
    }

    fn constrained_grad_norms(&self, p: &GmmParams, resp: &Responsibilities) -> Vec<f64> {
        let stats = self.suff_stats(resp);
        (0..self.k)
            .map(|k| (&stats.s_k[k] - &p.means[k] * stats.n_k[k]).norm())
            .collect()
    }
}
