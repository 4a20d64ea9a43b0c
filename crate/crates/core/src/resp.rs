//! Latent responsibility matrices.

use nalgebra::DMatrix;

use crate::error::ModelError;

/// Annealed (or standard) latent posterior over observation rows.
///
/// Rows correspond to observation bins: models may group tied observations
/// and attach a multiplicity to each row, so column sums weighted by
/// `row_weights` recover per-observation totals. Each row is a probability
/// vector over the latent states.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    probs: DMatrix<f64>,
    log_probs: DMatrix<f64>,
    row_weights: Vec<f64>,
}

impl Responsibilities {
    /// Builds from unnormalized log weights, normalizing each row with
    /// max-subtraction before exponentiation.
    ///
    /// Returns the degenerate-observation error when an entire row sits at
    /// -inf.
    pub fn from_log_unnormalized(
        log_unnorm: DMatrix<f64>,
        row_weights: Vec<f64>,
    ) -> Result<Self, ModelError> {
        assert_eq!(log_unnorm.nrows(), row_weights.len());
        let (n, k) = (log_unnorm.nrows(), log_unnorm.ncols());
        let mut probs = DMatrix::zeros(n, k);
        let mut log_probs = DMatrix::zeros(n, k);
        for i in 0..n {
            let row_max = (0..k)
                .map(|j| log_unnorm[(i, j)])
                .fold(f64::NEG_INFINITY, f64::max);
            if !row_max.is_finite() {
                return Err(ModelError::DegenerateObservation { index: i });
            }
            let mut sum = 0.0;
            for j in 0..k {
                sum += (log_unnorm[(i, j)] - row_max).exp();
            }
            let log_z = row_max + sum.ln();
            for j in 0..k {
                log_probs[(i, j)] = log_unnorm[(i, j)] - log_z;
                probs[(i, j)] = log_probs[(i, j)].exp();
            }
        }
        Ok(Self {
            probs,
            log_probs,
            row_weights,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_latent(&self) -> usize {
        self.probs.ncols()
    }

    /// Probability of latent state `state` on observation row `row`.
    pub fn prob(&self, row: usize, state: usize) -> f64 {
        self.probs[(row, state)]
    }

    /// Log-probability; -inf where the state has no support.
    pub fn log_prob(&self, row: usize, state: usize) -> f64 {
        self.log_probs[(row, state)]
    }

    /// Observation multiplicity of a row (1.0 for unbinned data).
    pub fn row_weight(&self, row: usize) -> f64 {
        self.row_weights[row]
    }

    /// Responsibility mass of one latent state: sum_i weight_i * w_ik.
    pub fn state_mass(&self, state: usize) -> f64 {
        (0..self.n_rows())
            .map(|i| self.row_weights[i] * self.probs[(i, state)])
            .sum()
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n_rows())
            .map(|i| (self.probs.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
