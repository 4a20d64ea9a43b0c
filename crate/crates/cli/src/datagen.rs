//! Synthetic data generation and dataset loading, deterministic per seed.

use std::path::Path;

use nalgebra::{Cholesky, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::config::GmmBlock;

/// Draws n points from the mixture: categorical component, then a
/// multivariate normal through the Cholesky factor of its covariance.
pub fn generate_gmm_data<R: Rng>(truth: &GmmBlock, n: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let k = truth.weights.len();
    let d = truth.means[0].len();
    let chols: Vec<_> = truth
        .covs
        .iter()
        .map(|c| Cholesky::new(c.clone()).expect("true covariances are positive definite"))
        .collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut comp = k - 1;
        for (j, &w) in truth.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                comp = j;
                break;
            }
        }
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        out.push(&truth.means[comp] + chols[comp].l() * z);
    }
    out
}

/// Draws n ZIP counts: structural zero with probability pi, else Poisson.
pub fn generate_zip_data<R: Rng>(pi: f64, lambda: f64, n: usize, rng: &mut R) -> Vec<u64> {
    let pois = Poisson::new(lambda).expect("lambda > 0");
    (0..n)
        .map(|_| {
            if rng.gen::<f64>() < pi {
                0
            } else {
                pois.sample(rng) as u64
            }
        })
        .collect()
}

/// Loads the plain-text failure-time format (one positive decimal per line,
/// `#` comments) with line-numbered errors.
pub fn load_dataset(path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    dhem_core::weibull::parse_dataset(&text)
        .map_err(|e| format!("{}: {e}", path.display()))
}
