//! Flat key-value run configuration with dotted sections.
//!
//! Lines look like `schedule.r_init = 0.1`; `#` starts a comment and blank
//! lines are skipped. Unknown keys are errors. Vector values are
//! comma-separated, matrix rows additionally separated by `;`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dhem_core::schedule::{RGrowth, ScheduleConfig};
use dhem_core::Variant;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gmm,
    Zip,
    Weibull,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gmm => "gmm",
            ModelKind::Zip => "zip",
            ModelKind::Weibull => "weibull",
        }
    }
}

/// Ground truth and initialization of the GMM study.
#[derive(Debug, Clone)]
pub struct GmmBlock {
    pub delta_sep: f64,
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

impl Default for GmmBlock {
    fn default() -> Self {
        Self {
            delta_sep: 0.5,
            weights: vec![0.2, 0.3, 0.5],
            means: vec![
                DVector::from_row_slice(&[-1.0, 1.0, 2.0]),
                DVector::from_row_slice(&[1.0, 1.0, 0.5]),
                DVector::from_row_slice(&[2.0, 0.0, -2.0]),
            ],
            covs: vec![
                DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0]),
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[2.0, 0.18, -0.25, 0.18, 0.1, 0.06, -0.25, 0.06, 0.5],
                ),
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[0.5, -0.08, 0.22, -0.08, 0.1, -0.12, 0.22, -0.12, 2.0],
                ),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZipBlock {
    pub pi_true: f64,
    pub lambda_true: f64,
    pub pi_min: f64,
    pub pi_init: f64,
    pub lambda_init: f64,
}

impl Default for ZipBlock {
    fn default() -> Self {
        Self {
            pi_true: 0.99,
            lambda_true: 0.3,
            pi_min: 0.5,
            pi_init: 0.7,
            lambda_init: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeibullBlock {
    /// Path of the failure-time file; `None` uses the bundled Aarset data.
    pub dataset: Option<PathBuf>,
    pub beta_init: [f64; 3],
}

impl Default for WeibullBlock {
    fn default() -> Self {
        Self {
            dataset: None,
            beta_init: [0.5, 1.0, 2.0],
        }
    }
}

/// One study: a model, one or more methods, replication counts and seeds.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelKind,
    pub methods: Vec<Variant>,
    pub replications: usize,
    pub sample_size: usize,
    pub base_seed: u64,
    pub out: Option<PathBuf>,
    pub schedule: ScheduleConfig,
    pub gmm: GmmBlock,
    pub zip: ZipBlock,
    pub weibull: WeibullBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Zip,
            methods: vec![Variant::AdaptiveDhem],
            replications: 1,
            sample_size: 1000,
            base_seed: 20240601,
            out: None,
            schedule: ScheduleConfig::default(),
            gmm: GmmBlock::default(),
            zip: ZipBlock::default(),
            weibull: WeibullBlock::default(),
        }
    }
}

impl RunConfig {
    /// Parses the config text; relative dataset paths resolve against
    /// `base_dir`. The `DHEM_SEED` environment variable overrides the seed.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| format!("line {}: {}", lineno + 1, msg);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(at(format!("duplicate key `{key}`")));
            }
            cfg.apply(key, value, base_dir).map_err(at)?;
        }
        if let Ok(seed) = std::env::var("DHEM_SEED") {
            cfg.base_seed = seed
                .parse()
                .map_err(|_| format!("DHEM_SEED `{seed}` is not an integer"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    fn apply(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<(), String> {
        match key {
            "model" => {
                self.model = match value {
                    "gmm" => ModelKind::Gmm,
                    "zip" => ModelKind::Zip,
                    "weibull" => ModelKind::Weibull,
                    other => return Err(format!("unknown model `{other}`")),
                }
            }
            "method" => {
                self.methods = value
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<Vec<_>, _>>()?;
                if self.methods.is_empty() {
                    return Err("method list is empty".into());
                }
            }
            "replications" => self.replications = parse_num(value)?,
            "sample_size" => self.sample_size = parse_num(value)?,
            "base_seed" => self.base_seed = parse_num(value)?,
            "out" => self.out = Some(base_dir.join(value)),
            "schedule.r_init" => self.schedule.r_init = parse_num(value)?,
            "schedule.r_growth" => {
                self.schedule.r_growth = if let Some(grid) = value.strip_prefix("grid:") {
                    RGrowth::Grid(parse_vec(grid)?)
                } else {
                    RGrowth::Geometric(parse_num(value)?)
                }
            }
            "schedule.r_retry_growth" => self.schedule.r_retry_growth = parse_num(value)?,
            "schedule.xi_decay" => self.schedule.xi_decay = parse_num(value)?,
            "schedule.tau" => self.schedule.tau = parse_num(value)?,
            "schedule.eta" => self.schedule.eta = parse_num(value)?,
            "schedule.max_iter" => self.schedule.max_iter = parse_num(value)?,
            "schedule.param_tol" => self.schedule.param_tol = parse_num(value)?,
            "schedule.loglik_tol" => self.schedule.loglik_tol = parse_num(value)?,
            "schedule.damping" => self.schedule.damping_grid = parse_vec(value)?,
            "zip.pi_true" => self.zip.pi_true = parse_num(value)?,
            "zip.lambda_true" => self.zip.lambda_true = parse_num(value)?,
            "zip.pi_min" => self.zip.pi_min = parse_num(value)?,
            "zip.pi_init" => self.zip.pi_init = parse_num(value)?,
            "zip.lambda_init" => self.zip.lambda_init = parse_num(value)?,
            "gmm.delta_sep" => self.gmm.delta_sep = parse_num(value)?,
            "gmm.pi_true" => self.gmm.weights = parse_vec(value)?,
            "gmm.mu1" | "gmm.mu2" | "gmm.mu3" => {
                let idx = key.as_bytes()[6] as usize - b'1' as usize;
                self.gmm.means[idx] = DVector::from_vec(parse_vec(value)?);
            }
            "gmm.sigma1" | "gmm.sigma2" | "gmm.sigma3" => {
                let idx = key.as_bytes()[9] as usize - b'1' as usize;
                self.gmm.covs[idx] = parse_matrix(value)?;
            }
            "weibull.dataset" => self.weibull.dataset = Some(base_dir.join(value)),
            "weibull.beta_init" => {
                let v = parse_vec(value)?;
                if v.len() != 3 {
                    return Err("weibull.beta_init needs exactly 3 entries".into());
                }
                self.weibull.beta_init = [v[0], v[1], v[2]];
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), String> {
        if self.replications == 0 {
            return Err("replications must be >= 1".into());
        }
        self.schedule.validate().map_err(|e| e.to_string())?;
        if !(self.zip.pi_min < self.zip.pi_init && self.zip.pi_init < 1.0) {
            return Err("zip.pi_init must lie in (pi_min, 1)".into());
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}`"))
}

fn parse_vec(value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|v| parse_num(v.trim()))
        .collect()
}

fn parse_matrix(value: &str) -> Result<DMatrix<f64>, String> {
    let rows: Vec<Vec<f64>> = value
        .split(';')
        .map(|row| parse_vec(row))
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix `{value}` is not square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
