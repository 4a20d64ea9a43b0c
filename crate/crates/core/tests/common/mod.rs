//! Shared oracle helpers: brute-force enumerations and grid searches kept
//! independent of the library's computation paths.
#![allow(dead_code)] // each test binary uses a subset

use dhem_core::gmm::GmmParams;
use dhem_core::zip::ZipParams;
use nalgebra::{DMatrix, DVector};

/// Direct ZIP observed log-likelihood from scalar pmf arithmetic.
pub fn zip_loglik_direct(data: &[u64], p: ZipParams) -> f64 {
    data.iter()
        .map(|&y| {
            let pois =
                (y as f64 * p.lambda.ln() - p.lambda - ln_factorial(y)).exp();
            let prob = if y == 0 {
                p.pi + (1.0 - p.pi) * pois
            } else {
                (1.0 - p.pi) * pois
            };
            prob.ln()
        })
        .sum()
}

pub fn ln_factorial(y: u64) -> f64 {
    (1..=y).map(|k| (k as f64).ln()).sum()
}

/// Per-observation latent probabilities of a ZIP model by enumeration of the
/// two latent states: returns (structural, poisson), annealed at level r.
pub fn zip_posterior_enum(p: ZipParams, y: u64, r: f64) -> (f64, f64) {
    let joint_struct = if y == 0 { p.pi } else { 0.0 };
    let joint_pois =
        (1.0 - p.pi) * (y as f64 * p.lambda.ln() - p.lambda - ln_factorial(y)).exp();
    let a = joint_struct.powf(r);
    let b = joint_pois.powf(r);
    (a / (a + b), b / (a + b))
}

/// Exhaustive-enumeration Delta D_KL(theta0 || theta1, r) over a ZIP sample.
pub fn zip_delta_dkl_enum(data: &[u64], th0: ZipParams, th1: ZipParams, r: f64) -> f64 {
    let mut total = 0.0;
    for &y in data {
        let wr = zip_posterior_enum(th0, y, r);
        let w0 = zip_posterior_enum(th0, y, 1.0);
        let w1 = zip_posterior_enum(th1, y, 1.0);
        if wr.0 > 0.0 {
            total += wr.0 * (w0.0 / w1.0).ln();
        }
        if wr.1 > 0.0 {
            total += wr.1 * (w0.1 / w1.1).ln();
        }
    }
    total
}

/// Exhaustive-enumeration surrogate Q_r(theta | theta0) over a ZIP sample.
pub fn zip_surrogate_enum(data: &[u64], theta: ZipParams, theta0: ZipParams, r: f64) -> f64 {
    let mut q = 0.0;
    for &y in data {
        let w = zip_posterior_enum(theta0, y, r);
        let log_joint_struct = if y == 0 { theta.pi.ln() } else { f64::NEG_INFINITY };
        let log_joint_pois = (1.0 - theta.pi).ln() + y as f64 * theta.lambda.ln()
            - theta.lambda
            - ln_factorial(y);
        if w.0 > 0.0 {
            q += w.0 * log_joint_struct;
        }
        if w.1 > 0.0 {
            q += w.1 * log_joint_pois;
        }
    }
    q
}

/// Two-stage dense grid search for the ZIP maximum-likelihood point.
pub fn zip_grid_mle(data: &[u64], pi_range: (f64, f64), lambda_range: (f64, f64)) -> ZipParams {
    let coarse = grid_argmax(data, pi_range, lambda_range, 400);
    let dp = (pi_range.1 - pi_range.0) / 400.0;
    let dl = (lambda_range.1 - lambda_range.0) / 400.0;
    let fine_pi = ((coarse.pi - 2.0 * dp).max(1e-6), (coarse.pi + 2.0 * dp).min(1.0 - 1e-6));
    let fine_lam = ((coarse.lambda - 2.0 * dl).max(1e-6), coarse.lambda + 2.0 * dl);
    grid_argmax(data, fine_pi, fine_lam, 800)
}

fn grid_argmax(
    data: &[u64],
    pi_range: (f64, f64),
    lambda_range: (f64, f64),
    steps: usize,
) -> ZipParams {
    let mut best = (f64::NEG_INFINITY, ZipParams { pi: 0.5, lambda: 1.0 });
    for i in 0..=steps {
        let pi = pi_range.0 + (pi_range.1 - pi_range.0) * i as f64 / steps as f64;
        for j in 0..=steps {
            let lambda =
                lambda_range.0 + (lambda_range.1 - lambda_range.0) * j as f64 / steps as f64;
            let p = ZipParams { pi, lambda };
            let ll = zip_loglik_direct(data, p);
            if ll > best.0 {
                best = (ll, p);
            }
        }
    }
    best.1
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(v)
}

/// Small well-separated 2-component, 2-d mixture instance.
pub fn gmm_toy_params() -> GmmParams {
    GmmParams {
        weights: vec![0.4, 0.6],
        means: vec![dvec(&[0.0, 0.0]), dvec(&[3.0, 2.0])],
        covs: vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]),
            DMatrix::from_row_slice(2, 2, &[1.2, -0.1, -0.1, 0.9]),
        ],
    }
}

pub fn gmm_toy_data() -> Vec<DVector<f64>> {
    vec![
        dvec(&[0.1, -0.2]),
        dvec(&[-0.5, 0.4]),
        dvec(&[0.3, 0.1]),
        dvec(&[2.8, 2.1]),
        dvec(&[3.2, 1.7]),
        dvec(&[2.9, 2.4]),
    ]
}
