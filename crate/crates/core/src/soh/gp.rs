//! Gaussian process regression with a squared-exponential kernel and
//! per-dimension length scales. Hyperparameters maximize the log marginal
//! likelihood by deterministic multi-start compass search in log space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GpError {
    #[error("need at least 2 training points, got {0}")]
    TooFewPoints(usize),
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel matrix not positive definite even at jitter {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("hyperparameters must be positive")]
    NonPositiveHyperparameter,
}

/// Kernel and noise hyperparameters (variances, not standard deviations).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GpHyperparameters {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
    pub noise_variance: f64,
}

impl GpHyperparameters {
    fn validate(&self) -> Result<(), GpError> {
        let ok = self.signal_variance > 0.0
            && self.noise_variance > 0.0
            && self.length_scales.iter().all(|&l| l > 0.0);
        if ok {
            Ok(())
        } else {
            Err(GpError::NonPositiveHyperparameter)
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpOptions {
    /// Skip the marginal-likelihood search and use these hyperparameters.
    pub fixed: Option<GpHyperparameters>,
    /// Compass-search restarts.
    pub n_starts: usize,
    /// Lower bound applied to the noise variance during the search.
    pub noise_floor: f64,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            fixed: None,
            n_starts: 4,
            noise_floor: 1e-10,
        }
    }
}

/// A fitted GP: retained training data and the factorized covariance.
/// Targets are centered internally (the prior mean is the training mean),
/// so a constant function is reproduced exactly.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub hyper: GpHyperparameters,
    x_train: Vec<Vec<f64>>,
    y_train: Vec<f64>,
    y_mean: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

fn kernel(a: &[f64], b: &[f64], h: &GpHyperparameters) -> f64 {
    let mut s = 0.0;
    for d in 0..a.len() {
        let z = (a[d] - b[d]) / h.length_scales[d];
        s += z * z;
    }
    h.signal_variance * (-0.5 * s).exp()
}

fn kernel_matrix(x: &[Vec<f64>], h: &GpHyperparameters) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let mut v = kernel(&x[i], &x[j], h);
        if i == j {
            v += h.noise_variance;
        }
        v
    })
}

/// Cholesky with escalating jitter; returns the factor and the jitter used.
fn factorize(x: &[Vec<f64>], h: &GpHyperparameters) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    let base = kernel_matrix(x, h);
    let mut jitter = 0.0;
    let max_jitter = 1e-2 * h.signal_variance;
    loop {
        let k = if jitter > 0.0 {
            let mut k = base.clone();
            for i in 0..k.nrows() {
                k[(i, i)] += jitter;
            }
            k
        } else {
            base.clone()
        };
        if let Some(c) = Cholesky::new(k) {
            return Ok((c, jitter));
        }
        jitter = if jitter == 0.0 {
            1e-10 * h.signal_variance
        } else {
            jitter * 10.0
        };
        if jitter > max_jitter {
            return Err(GpError::NotPositiveDefinite { max_jitter });
        }
    }
}

/// Log marginal likelihood of the data under the hyperparameters.
pub fn log_marginal_likelihood(
    x: &[Vec<f64>],
    y: &[f64],
    h: &GpHyperparameters,
) -> Result<f64, GpError> {
    let (chol, _) = factorize(x, h)?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let n = y.len() as f64;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    Ok(-0.5 * yv.dot(&alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

fn column_scales(x: &[Vec<f64>]) -> Vec<f64> {
    let d = x[0].len();
    let n = x.len() as f64;
    (0..d)
        .map(|j| {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect()
}

/// Fits a GP to `(x, y)`. Inputs are used as given; callers that need
/// normalization (the bagging ensemble) apply it beforehand.
pub fn gp_fit(x: &[Vec<f64>], y: &[f64], opts: &GpOptions) -> Result<GpModel, GpError> {
    if x.len() < 2 {
        return Err(GpError::TooFewPoints(x.len()));
    }
    if x.len() != y.len() {
        return Err(GpError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let dim = x[0].len();
    for row in x {
        if row.len() != dim {
            return Err(GpError::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
    }

    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let residuals: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let hyper = match &opts.fixed {
        Some(h) => {
            h.validate()?;
            h.clone()
        }
        None => {
            let n = y.len() as f64;
            let y_var = (residuals.iter().map(|v| v * v).sum::<f64>() / n).max(1e-12);
            let ls0 = column_scales(x);

            // log10-space search box around data scales
            let lo: Vec<f64> = std::iter::once(y_var * 1e-4)
                .chain(ls0.iter().map(|s| s * 1e-2))
                .chain(std::iter::once((y_var * 1e-8).max(opts.noise_floor)))
                .map(|v| v.log10())
                .collect();
            let hi: Vec<f64> = std::iter::once(y_var * 1e4)
                .chain(ls0.iter().map(|s| s * 1e2))
                .chain(std::iter::once(y_var.max(opts.noise_floor * 10.0)))
                .map(|v| v.log10())
                .collect();

            let decode = |p: &[f64]| GpHyperparameters {
                signal_variance: 10f64.powf(p[0]),
                length_scales: p[1..=dim].iter().map(|v| 10f64.powf(*v)).collect(),
                noise_variance: 10f64.powf(p[dim + 1]),
            };
            let objective = |p: &[f64]| -> f64 {
                match log_marginal_likelihood(x, &residuals, &decode(p)) {
                    Ok(lml) => -lml,
                    Err(_) => f64::INFINITY,
                }
            };

            // deterministic start points: data scales with shrunk/grown
            // length scales and two noise levels
            let mut starts: Vec<Vec<f64>> = Vec::new();
            for (ls_factor, noise_frac) in [(1.0, 1e-2), (0.3, 1e-2), (3.0, 1e-4), (1.0, 1e-1)] {
                let p: Vec<f64> = std::iter::once(y_var)
                    .chain(ls0.iter().map(|s| s * ls_factor))
                    .chain(std::iter::once((y_var * noise_frac).max(opts.noise_floor)))
                    .map(|v| v.log10())
                    .collect();
                starts.push(p);
                if starts.len() >= opts.n_starts.max(1) {
                    break;
                }
            }

            let mut best_p = starts[0].clone();
            let mut best_f = f64::INFINITY;
            for start in starts {
                let (p, f) = compass_search(&objective, &start, &lo, &hi);
                if f < best_f {
                    best_f = f;
                    best_p = p;
                }
            }
            decode(&best_p)
        }
    };

    let (chol, jitter) = factorize(x, &hyper)?;
    let alpha = chol.solve(&DVector::from_column_slice(&residuals));
    Ok(GpModel {
        hyper,
        x_train: x.to_vec(),
        y_train: y.to_vec(),
        y_mean,
        chol,
        alpha,
        jitter,
    })
}

/// Coordinate pattern search with step halving; bounded, derivative-free,
/// fully deterministic.
fn compass_search(
    objective: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> (Vec<f64>, f64) {
    let clamp = |p: &mut Vec<f64>| {
        for j in 0..p.len() {
            p[j] = p[j].clamp(lo[j], hi[j]);
        }
    };
    let mut p = start.to_vec();
    clamp(&mut p);
    let mut f = objective(&p);
    let mut step = 0.5;
    let mut evals = 0;
    while step > 1e-3 && evals < 600 {
        let mut improved = false;
        for j in 0..p.len() {
            for sign in [1.0, -1.0] {
                let mut q = p.clone();
                q[j] = (q[j] + sign * step).clamp(lo[j], hi[j]);
                if q[j] == p[j] {
                    continue;
                }
                let fq = objective(&q);
                evals += 1;
                if fq < f {
                    p = q;
                    f = fq;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (p, f)
}

impl GpModel {
    pub fn n_train(&self) -> usize {
        self.y_train.len()
    }

    pub fn dim(&self) -> usize {
        self.x_train[0].len()
    }

    pub fn x_train(&self) -> &[Vec<f64>] {
        &self.x_train
    }

    pub fn y_train(&self) -> &[f64] {
        &self.y_train
    }

    /// Rebuilds a model from stored hyperparameters and training data
    /// (artifact loading path).
    pub fn from_parts(
        hyper: GpHyperparameters,
        x_train: Vec<Vec<f64>>,
        y_train: Vec<f64>,
    ) -> Result<Self, GpError> {
        hyper.validate()?;
        let y_mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
        let residuals: Vec<f64> = y_train.iter().map(|v| v - y_mean).collect();
        let (chol, jitter) = factorize(&x_train, &hyper)?;
        let alpha = chol.solve(&DVector::from_column_slice(&residuals));
        Ok(Self {
            hyper,
            x_train,
            y_train,
            y_mean,
            chol,
            alpha,
            jitter,
        })
    }

    /// Jitter added during factorization (zero in the common case).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

/// Exact posterior mean and (latent) variance at the query points.
/// Variance is clamped at zero against rounding.
pub fn gp_predict(model: &GpModel, x_query: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = model.n_train();
    let mut means = Vec::with_capacity(x_query.len());
    let mut vars = Vec::with_capacity(x_query.len());
    for q in x_query {
        let k_star = DVector::from_fn(n, |i, _| kernel(&model.x_train[i], q, &model.hyper));
        let mean = model.y_mean + k_star.dot(&model.alpha);
        // v = L^{-1} k*; var = k(q,q) - v'v
        let mut v = k_star;
        model.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let var = (model.hyper.signal_variance - v.dot(&v)).max(0.0);
        means.push(mean);
        vars.push(var);
    }
    (means, vars)
}
