//! Replication studies: seeded per-replication streams, error metrics,
//! success accounting and two-pass aggregation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dhem_core::gmm::{gmm_error_metrics, random_init, GmmModel, GmmParams};
use dhem_core::weibull::{aarset, WeibullModel};
use dhem_core::zip::{ZipModel, ZipParams};
use dhem_core::{run_variant, MixtureModel, TraceRecord, Variant};

use crate::config::{ModelKind, RunConfig};
use crate::datagen::{generate_gmm_data, generate_zip_data, load_dataset};

/// One replication of one method.
#[derive(Debug, Clone)]
pub struct RepRecord {
    pub replication: usize,
    pub converged: bool,
    pub success: bool,
    pub iterations: usize,
    pub final_r: f64,
    pub final_xi: f64,
    pub loglik: f64,
    /// Aligned with `metric_names` of the study's model; NaN on hard errors.
    pub metrics: Vec<f64>,
    pub error: Option<String>,
    pub trace: Vec<TraceRecord>,
}

/// Per-method aggregate: metric means/sds, success rate and run statistics.
#[derive(Debug, Clone)]
pub struct ReplicationSummary {
    pub method: Variant,
    pub metrics: Vec<(String, f64, f64)>,
    pub success_rate: f64,
    pub mean_iterations: f64,
    pub mean_final_r: f64,
    pub replications: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Variant,
    pub records: Vec<RepRecord>,
    pub summary: ReplicationSummary,
}

pub fn metric_names(model: ModelKind) -> &'static [&'static str] {
    match model {
        ModelKind::Zip => &["pi_bias", "lambda_bias"],
        ModelKind::Gmm => &["pi_l1", "mu_l2", "sigma_fro"],
        ModelKind::Weibull => &[
            "pi1",
            "pi2",
            "pi3",
            "lambda1",
            "lambda2",
            "lambda3",
            "beta1",
            "beta3",
            "grad_q_beta1",
            "grad_q_beta3",
        ],
    }
}

/// Runs every configured method over the replication grid.
///
/// Replication i always consumes RNG stream i of the base seed, so results
/// do not depend on `jobs` or scheduling order.
pub fn run_study(
    config: &RunConfig,
    keep_traces: bool,
    jobs: usize,
) -> Result<Vec<MethodResult>, String> {
    let weibull_data = match config.model {
        ModelKind::Weibull => Some(match &config.weibull.dataset {
            Some(path) => load_dataset(path)?,
            None => aarset(),
        }),
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let records: Vec<RepRecord> = pool.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|rep| run_replication(config, method, rep, weibull_data.as_deref(), keep_traces))
                .collect()
        });
        let summary = summarize(config, method, &records);
        out.push(MethodResult {
            method,
            records,
            summary,
        });
    }
    Ok(out)
}

fn run_replication(
    config: &RunConfig,
    method: Variant,
    rep: usize,
    weibull_data: Option<&[f64]>,
    keep_traces: bool,
) -> RepRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(config.base_seed);
    rng.set_stream(rep as u64);
    let n_metrics = metric_names(config.model).len();
    let failed = |msg: String| RepRecord {
        replication: rep,
        converged: false,
        success: false,
        iterations: 0,
        final_r: f64::NAN,
        final_xi: f64::NAN,
        loglik: f64::NAN,
        metrics: vec![f64::NAN; n_metrics],
        error: Some(msg),
        trace: Vec::new(),
    };

    match config.model {
        ModelKind::Zip => {
            let data = generate_zip_data(
                config.zip.pi_true,
                config.zip.lambda_true,
                config.sample_size,
                &mut rng,
            );
            let model = ZipModel::new(&data, config.zip.pi_min);
            let init = ZipParams {
                pi: config.zip.pi_init,
                lambda: config.zip.lambda_init,
            };
            let outcome = match run_variant(&model, method, init, &config.schedule) {
                Ok(o) => o,
                Err(e) => return failed(e.to_string()),
            };
            let metrics = vec![
                outcome.params.pi - config.zip.pi_true,
                outcome.params.lambda - config.zip.lambda_true,
            ];
            finish(rep, outcome, metrics, true, keep_traces)
        }
        ModelKind::Gmm => {
            let data = generate_gmm_data(&config.gmm, config.sample_size, &mut rng);
            let model = GmmModel::new(data, config.gmm.weights.len(), config.gmm.delta_sep);
            let init = match random_init(&model, &mut rng, 100) {
                Ok(p) => p,
                Err(e) => return failed(e.to_string()),
            };
            let outcome = match run_variant(&model, method, init, &config.schedule) {
                Ok(o) => o,
                Err(e) => return failed(e.to_string()),
            };
            let truth = GmmParams {
                weights: config.gmm.weights.clone(),
                means: config.gmm.means.clone(),
                covs: config.gmm.covs.clone(),
            };
            let (pi_l1, mu_l2, sigma_fro) = gmm_error_metrics(&outcome.params, &truth);
            let healthy = gmm_health(&model, &outcome.params);
            finish(rep, outcome, vec![pi_l1, mu_l2, sigma_fro], healthy, keep_traces)
        }
        ModelKind::Weibull => {
            let data = weibull_data.expect("dataset preloaded for weibull studies");
            let model = WeibullModel::new(data);
            let init = model.paper_init(config.weibull.beta_init);
            let outcome = match run_variant(&model, method, init, &config.schedule) {
                Ok(o) => o,
                Err(e) => return failed(e.to_string()),
            };
            let p = &outcome.params;
            let (g1, g3) = match model.annealed_responsibilities(p, 1.0) {
                Ok(resp) => model.report_shape_gradients(p, &resp),
                Err(_) => (f64::NAN, f64::NAN),
            };
            let metrics = vec![
                p.weights[0], p.weights[1], p.weights[2],
                p.lambdas[0], p.lambdas[1], p.lambdas[2],
                p.betas[0], p.betas[2],
                g1, g3,
            ];
            finish(rep, outcome, metrics, true, keep_traces)
        }
    }
}

fn finish<P>(
    rep: usize,
    outcome: dhem_core::RunOutcome<P>,
    metrics: Vec<f64>,
    healthy: bool,
    keep_traces: bool,
) -> RepRecord {
    let converged = outcome.termination.stopped_early();
    RepRecord {
        replication: rep,
        converged,
        success: converged && healthy,
        iterations: outcome.iterations,
        final_r: outcome.final_r,
        final_xi: outcome.final_xi,
        loglik: outcome.loglik,
        metrics,
        error: None,
        trace: if keep_traces { outcome.trace } else { Vec::new() },
    }
}

/// Success screen for mixture fits: no covariance close to singular and no
/// responsibility column starved below one observation.
fn gmm_health(model: &GmmModel, params: &GmmParams) -> bool {
    let eig_ok = params
        .covs
        .iter()
        .all(|c| c.clone().symmetric_eigen().eigenvalues.min() > 1e-6);
    if !eig_ok {
        return false;
    }
    match model.annealed_responsibilities(params, 1.0) {
        Ok(resp) => (0..params.n_components()).all(|k| resp.state_mass(k) >= 1.0),
        Err(_) => false,
    }
}

fn summarize(config: &RunConfig, method: Variant, records: &[RepRecord]) -> ReplicationSummary {
    let names = metric_names(config.model);
    let usable: Vec<&RepRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let metrics = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let values: Vec<f64> = usable.iter().map(|r| r.metrics[j]).collect();
            let (mean, sd) = mean_sd(&values);
            (name.to_string(), mean, sd)
        })
        .collect();
    let success_rate =
        records.iter().filter(|r| r.success).count() as f64 / records.len() as f64;
    let mean_iterations =
        usable.iter().map(|r| r.iterations as f64).sum::<f64>() / usable.len().max(1) as f64;
    let mean_final_r = usable.iter().map(|r| r.final_r).sum::<f64>() / usable.len().max(1) as f64;
    ReplicationSummary {
        method,
        metrics,
        success_rate,
        mean_iterations,
        mean_final_r,
        replications: records.len(),
        base_seed: config.base_seed,
    }
}

/// Two-pass mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}
