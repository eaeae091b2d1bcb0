//! Two-dimensional projections of document vectors: PCA and exact t-SNE.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, DenseMatrix};
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionMethod::Pca => "pca",
            ProjectionMethod::Tsne => "tsne",
        })
    }
}

impl FromStr for ProjectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(ProjectionMethod::Pca),
            "tsne" => Ok(ProjectionMethod::Tsne),
            other => Err(Error::arg(format!("unknown projection `{other}` (expected pca or tsne)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub method: ProjectionMethod,
    /// `N x dims`.
    pub coords: DenseMatrix,
    /// Share of total variance per component; PCA only.
    pub explained_variance: Vec<f64>,
    /// KL(P || Q) after the last iteration; t-SNE only.
    pub kl_final: Option<f64>,
}

fn center_columns(x: &DenseMatrix) -> DenseMatrix {
    let (n, p) = x.shape();
    let means: Vec<f64> = (0..p).map(|j| x.column(j).iter().sum::<f64>() / n as f64).collect();
    let mut c = x.clone();
    par::for_each_row_mut(c.as_mut_slice(), p, |_, row| {
        for (v, m) in row.iter_mut().zip(&means) {
            *v -= m;
        }
    });
    c
}

pub fn pca_project(x: &DenseMatrix, dims: usize) -> Result<Projection> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::arg(format!("PCA needs at least 2 rows, got {n}")));
    }
    if dims == 0 || dims > p {
        return Err(Error::arg(format!("dims must be in 1..={p}, got {dims}")));
    }
    let xc = center_columns(x);
    let mut cov = xc.t_matmul(&xc);
    cov.as_mut_slice().iter_mut().for_each(|v| *v /= (n - 1) as f64);
    let trace: f64 = (0..p).map(|j| cov.get(j, j)).sum();
    if trace <= f64::EPSILON * p as f64 {
        return Err(Error::Degenerate("input has zero variance".into()));
    }
    let eig = linalg::sym_eigen_topk(&cov, dims, linalg::DEFAULT_TOL, linalg::DEFAULT_MAX_ITER)?;
    Ok(Projection {
        method: ProjectionMethod::Pca,
        coords: xc.matmul(&eig.vectors),
        explained_variance: eig.values.iter().map(|&l| l.max(0.0) / trace).collect(),
        kl_final: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub dims: usize,
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            dims: 2,
            perplexity: 10.0,
            iterations: 1000,
            learning_rate: 100.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

/// Target entropy tolerance, in nats.
pub const ENTROPY_TOL: f64 = 1e-4;
const BISECTION_STEPS: usize = 200;
const INIT_STD: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

/// Squared Euclidean distances between rows.
pub fn squared_distances(x: &DenseMatrix) -> DenseMatrix {
    let n = x.rows();
    let mut d = DenseMatrix::zeros(n, n);
    par::for_each_row_mut(d.as_mut_slice(), n, |i, row| {
        let xi = x.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = xi.iter().zip(x.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
        }
    });
    d
}

/// Fills `row` with `exp(-beta (d_j - d_min))` normalized, leaving `skip`
/// at zero, and returns the entropy in nats.
fn gaussian_row(d: &[f64], skip: usize, beta: f64, d_min: f64, row: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (&dj, p)) in d.iter().zip(row.iter_mut()).enumerate() {
        if j == skip {
            *p = 0.0;
            continue;
        }
        let shifted = dj - d_min;
        *p = (-beta * shifted).exp();
        sum += *p;
        weighted += shifted * *p;
    }
    row.iter_mut().for_each(|p| *p /= sum);
    sum.ln() + beta * weighted / sum
}

/// Conditional affinities `p_{j|i}` with per-row precision found by
/// bisection so each row's entropy is `ln(perplexity)`. Returns the rows and
/// their achieved entropies.
pub fn conditional_affinities(d2: &DenseMatrix, perplexity: f64) -> Result<(DenseMatrix, Vec<f64>)> {
    let n = d2.rows();
    let target = perplexity.ln();
    let rows = par::map_indices(n, |i| {
        let d = d2.row(i);
        let d_min = d
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let mut row = vec![0.0; n];
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        let mut h = gaussian_row(d, i, beta, d_min, &mut row);
        for _ in 0..BISECTION_STEPS {
            if (h - target).abs() <= ENTROPY_TOL {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
            h = gaussian_row(d, i, beta, d_min, &mut row);
        }
        (row, h)
    });
    if let Some((i, (_, h))) = rows.iter().enumerate().find(|(_, (_, h))| (h - target).abs() > ENTROPY_TOL) {
        log::error!("perplexity calibration failed for point {i}");
        return Err(Error::NotConverged {
            iterations: BISECTION_STEPS,
            residual: (h - target).abs(),
        });
    }
    let entropies = rows.iter().map(|(_, h)| *h).collect();
    let data = rows.into_iter().flat_map(|(r, _)| r).collect();
    Ok((DenseMatrix::from_vec(n, n, data)?, entropies))
}

/// Joint affinities `(P + Pᵀ) / 2N`: symmetric and summing to 1.
pub fn joint_affinities(x: &DenseMatrix, perplexity: f64) -> Result<DenseMatrix> {
    let n = x.rows();
    let (cond, _) = conditional_affinities(&squared_distances(x), perplexity)?;
    let mut p = DenseMatrix::zeros(n, n);
    let denom = 2.0 * n as f64;
    par::for_each_row_mut(p.as_mut_slice(), n, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (cond.get(i, j) + cond.get(j, i)) / denom;
        }
    });
    Ok(p)
}

/// Student-t kernel `1 / (1 + |y_i - y_j|²)` with a zero diagonal, and its sum.
fn student_kernel(y: &DenseMatrix) -> (DenseMatrix, f64) {
    let mut num = squared_distances(y);
    let n = num.rows();
    par::for_each_row_mut(num.as_mut_slice(), n, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 0.0 } else { 1.0 / (1.0 + *v) };
        }
    });
    let z = (0..n).map(|i| num.row(i).iter().sum::<f64>()).sum();
    (num, z)
}

/// KL(P || Q) for the embedding `y`.
pub fn kl_divergence(p: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let (num, z) = student_kernel(y);
    p.as_slice()
        .iter()
        .zip(num.as_slice())
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &qn)| pij * (pij / (qn / z).max(f64::MIN_POSITIVE)).ln())
        .sum()
}

pub fn tsne_project(x: &DenseMatrix, cfg: &TsneConfig) -> Result<Projection> {
    let n = x.rows();
    if !(cfg.perplexity >= 2.0) {
        return Err(Error::arg(format!("perplexity must be at least 2, got {}", cfg.perplexity)));
    }
    if (n as f64) < 3.0 * cfg.perplexity + 1.0 {
        return Err(Error::arg(format!(
            "t-SNE with perplexity {} needs at least {} points, got {n}",
            cfg.perplexity,
            (3.0 * cfg.perplexity + 1.0).ceil()
        )));
    }
    if cfg.dims == 0 || !(cfg.learning_rate > 0.0) || cfg.iterations == 0 {
        return Err(Error::arg("dims, learning rate and iterations must be positive"));
    }
    let p = joint_affinities(x, cfg.perplexity)?;
    let dims = cfg.dims;

    let mut r = rng::seeded(cfg.seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    let mut y = DenseMatrix::from_vec(n, dims, (0..n * dims).map(|_| normal.sample(&mut r)).collect())?;
    let mut update = vec![0.0; n * dims];
    let mut gains = vec![1.0f64; n * dims];
    let mut grad = DenseMatrix::zeros(n, dims);

    for it in 0..cfg.iterations {
        let exaggeration = if it < cfg.exaggeration_iters { cfg.early_exaggeration } else { 1.0 };
        let momentum = if it < cfg.momentum_switch { cfg.momentum } else { cfg.final_momentum };
        let (num, z) = student_kernel(&y);
        par::for_each_row_mut(grad.as_mut_slice(), dims, |i, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            let yi = y.row(i);
            for j in 0..n {
                let qn = num.get(i, j);
                let coeff = 4.0 * (exaggeration * p.get(i, j) - qn / z) * qn;
                for (gd, (a, b)) in g.iter_mut().zip(yi.iter().zip(y.row(j))) {
                    *gd += coeff * (a - b);
                }
            }
        });
        let ys = y.as_mut_slice();
        for (((yv, u), gain), &g) in ys.iter_mut().zip(&mut update).zip(&mut gains).zip(grad.as_slice()) {
            *gain = if (g > 0.0) != (*u > 0.0) { *gain + 0.2 } else { (*gain * 0.8).max(MIN_GAIN) };
            *u = momentum * *u - cfg.learning_rate * *gain * g;
            *yv += *u;
        }
        for d in 0..dims {
            let mean = (0..n).map(|i| ys[i * dims + d]).sum::<f64>() / n as f64;
            (0..n).for_each(|i| ys[i * dims + d] -= mean);
        }
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("t-SNE diverged at iteration {it}")));
        }
    }
    let kl = kl_divergence(&p, &y);
    Ok(Projection {
        method: ProjectionMethod::Tsne,
        coords: y,
        explained_variance: Vec::new(),
        kl_final: Some(kl),
    })
}
