//! Exact Gaussian-process regression with a squared-exponential kernel.
//!
//! Hyperparameters `(h, λ, σ)` are fitted by maximizing the log marginal
//! likelihood with BFGS in `(ln h, ln λ, ln σ)`, from a moment-based start
//! plus seeded random restarts.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

/// Jitter ladder for factorizing `V = K + σ²I`, relative to the mean diagonal.
const JITTER_START: f64 = 1e-10;
const JITTER_STOP: f64 = 1e-4;

/// Box on the log-hyperparameters; keeps degenerate data from running off
/// to infinity.
const LOG_BOUNDS: [(f64, f64); 3] = [(-10.0, 10.0), (-10.0, 10.0), (-10.0, 5.0)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    /// Output scale.
    pub h: f64,
    /// Input scale.
    pub lambda: f64,
    /// Observation noise variance `σ²`.
    pub noise_var: f64,
}

impl GpHyperparams {
    pub fn to_log(&self) -> [f64; 3] {
        [self.h.ln(), self.lambda.ln(), 0.5 * self.noise_var.ln()]
    }

    pub fn from_log(theta: [f64; 3]) -> Self {
        GpHyperparams {
            h: theta[0].exp(),
            lambda: theta[1].exp(),
            noise_var: (2.0 * theta[2]).exp(),
        }
    }
}

/// `k(a, b) = h² exp(-‖a - b‖² / λ²)`.
pub fn se_kernel(a: &[f64], b: &[f64], h: f64, lambda: f64) -> f64 {
    h * h * (-sq_dist(a, b) / (lambda * lambda)).exp()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn pairwise_sq_dist(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = sq_dist(x.row(i), x.row(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn covariance(dist: &Matrix, hp: &GpHyperparams) -> (Matrix, Matrix) {
    let n = dist.rows();
    let mut k = Matrix::zeros(n, n);
    let inv_l2 = 1.0 / (hp.lambda * hp.lambda);
    let h2 = hp.h * hp.h;
    for i in 0..n {
        for j in 0..=i {
            let v = h2 * (-dist[(i, j)] * inv_l2).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    let mut v = k.clone();
    for i in 0..n {
        v[(i, i)] += hp.noise_var;
    }
    (k, v)
}

/// A GP conditioned on training data.
#[derive(Clone, Debug)]
pub struct GpModel {
    pub hyper: GpHyperparams,
    /// Constant prior mean (0 unless fitted with `constant_mean`).
    pub prior_mean: f64,
    x: Matrix,
    y: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
}

impl GpModel {
    /// Conditions the prior on `(x, y)` with fixed hyperparameters.
    pub fn condition(x: Matrix, y: Vec<f64>, hyper: GpHyperparams, prior_mean: f64) -> Result<Self> {
        if x.rows() != y.len() || x.rows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "{} input rows but {} outputs",
                x.rows(),
                y.len()
            )));
        }
        let (_, v) = covariance(&pairwise_sq_dist(&x), &hyper);
        let chol = Cholesky::factor_with_jitter(&v, JITTER_START, JITTER_STOP)?;
        let centered: Vec<f64> = y.iter().map(|v| v - prior_mean).collect();
        let alpha = chol.solve(&centered);
        Ok(GpModel {
            hyper,
            prior_mean,
            x,
            y,
            chol,
            alpha,
        })
    }

    pub fn train_inputs(&self) -> &Matrix {
        &self.x
    }

    pub fn train_outputs(&self) -> &[f64] {
        &self.y
    }

    /// Standard Gaussian log density of `y` under `N(μ, V)`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let centered: Vec<f64> = self.y.iter().map(|v| v - self.prior_mean).collect();
        -0.5 * dot(&centered, &self.alpha)
            - 0.5 * self.chol.log_det()
            - 0.5 * self.y.len() as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    fn cross_kernel(&self, xs: &[f64]) -> Vec<f64> {
        (0..self.x.rows())
            .map(|i| se_kernel(self.x.row(i), xs, self.hyper.h, self.hyper.lambda))
            .collect()
    }

    /// Posterior mean of the latent function at `xs`.
    pub fn predict_mean(&self, xs: &[f64]) -> f64 {
        self.prior_mean + dot(&self.cross_kernel(xs), &self.alpha)
    }

    /// Posterior mean and variance of the latent function at `xs`.
    pub fn predict(&self, xs: &[f64]) -> (f64, f64) {
        let kx = self.cross_kernel(xs);
        let mean = self.prior_mean + dot(&kx, &self.alpha);
        let v = self.chol.solve_lower(&kx);
        let var = self.hyper.h * self.hyper.h - dot(&v, &v);
        (mean, var.max(0.0))
    }
}

/// Log marginal likelihood and its gradient in `(ln h, ln λ, ln σ)`.
pub fn log_marginal_likelihood_with_grad(
    x: &Matrix,
    y: &[f64],
    prior_mean: f64,
    log_params: [f64; 3],
) -> Result<(f64, [f64; 3])> {
    let dist = pairwise_sq_dist(x);
    lml_and_grad(&dist, y, prior_mean, log_params)
}

fn lml_only(dist: &Matrix, y: &[f64], prior_mean: f64, log_params: [f64; 3]) -> Result<f64> {
    let hp = GpHyperparams::from_log(log_params);
    let (_, v) = covariance(dist, &hp);
    let chol = Cholesky::factor_with_jitter(&v, JITTER_START, JITTER_STOP)?;
    let centered: Vec<f64> = y.iter().map(|v| v - prior_mean).collect();
    let alpha = chol.solve(&centered);
    Ok(-0.5 * dot(&centered, &alpha)
        - 0.5 * chol.log_det()
        - 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

fn lml_and_grad(
    dist: &Matrix,
    y: &[f64],
    prior_mean: f64,
    log_params: [f64; 3],
) -> Result<(f64, [f64; 3])> {
    let hp = GpHyperparams::from_log(log_params);
    let n = y.len();
    let (k, v) = covariance(dist, &hp);
    let chol = Cholesky::factor_with_jitter(&v, JITTER_START, JITTER_STOP)?;
    let centered: Vec<f64> = y.iter().map(|v| v - prior_mean).collect();
    let alpha = chol.solve(&centered);
    let lml = -0.5 * dot(&centered, &alpha)
        - 0.5 * chol.log_det()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let w = chol.inverse();
    // ∂/∂θ = ½ Σ_ij (α_i α_j − W_ij) ∂V_ij
    let inv_l2 = 1.0 / (hp.lambda * hp.lambda);
    let mut grad = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let m = alpha[i] * alpha[j] - w[(i, j)];
            let kij = k[(i, j)];
            grad[0] += m * 2.0 * kij;
            grad[1] += m * kij * 2.0 * dist[(i, j)] * inv_l2;
        }
        grad[2] += (alpha[i] * alpha[i] - w[(i, i)]) * 2.0 * hp.noise_var;
    }
    Ok((lml, grad.map(|g| 0.5 * g)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpFitOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Hyperparameters are optimized on at most this many (randomly chosen)
    /// rows; the final model conditions on every row.
    pub max_opt_rows: usize,
    pub seed: u64,
    /// Use the sample mean of `y` as a constant prior mean instead of 0.
    pub constant_mean: bool,
    /// Starting point; moment-based when absent.
    pub init: Option<GpHyperparams>,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        GpFitOptions {
            restarts: 5,
            max_iter: 100,
            max_opt_rows: 400,
            seed: 0,
            constant_mean: false,
            init: None,
        }
    }
}

fn clamp_log(theta: [f64; 3]) -> [f64; 3] {
    let mut out = theta;
    for (t, (lo, hi)) in out.iter_mut().zip(LOG_BOUNDS) {
        *t = t.clamp(lo, hi);
    }
    out
}

fn moment_init(x: &Matrix, y: &[f64], prior_mean: f64) -> [f64; 3] {
    let n = y.len() as f64;
    let y_sd = (y.iter().map(|v| (v - prior_mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(1e-3);
    let spread: f64 = (0..x.cols())
        .map(|j| {
            let col = x.column(j);
            let m = col.iter().sum::<f64>() / n;
            col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        .sqrt()
        .max(1e-3);
    clamp_log([y_sd.ln(), spread.ln(), (0.5 * y_sd).ln()])
}

/// BFGS ascent on the log marginal likelihood from `start`.
fn maximize(dist: &Matrix, y: &[f64], prior_mean: f64, start: [f64; 3], max_iter: usize) -> Option<([f64; 3], f64)> {
    let neg = |t: [f64; 3]| lml_only(dist, y, prior_mean, t).ok().map(|v| -v).filter(|v| v.is_finite());
    let neg_grad = |t: [f64; 3]| {
        lml_and_grad(dist, y, prior_mean, t)
            .ok()
            .filter(|(v, g)| v.is_finite() && g.iter().all(|x| x.is_finite()))
            .map(|(v, g)| (-v, g.map(|x| -x)))
    };
    let mut theta = clamp_log(start);
    let (mut f, mut g) = neg_grad(theta)?;
    let mut hinv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..max_iter {
        let mut d = [0.0; 3];
        for i in 0..3 {
            d[i] = -(0..3).map(|j| hinv[i][j] * g[j]).sum::<f64>();
        }
        let mut slope: f64 = (0..3).map(|i| g[i] * d[i]).sum();
        if slope >= 0.0 {
            hinv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            d = g.map(|x| -x);
            slope = -(g.iter().map(|x| x * x).sum::<f64>());
        }
        let max_move = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut step = if max_move > 2.0 { 2.0 / max_move } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let cand = clamp_log([theta[0] + step * d[0], theta[1] + step * d[1], theta[2] + step * d[2]]);
            if let Some(fc) = neg(cand) {
                if fc <= f + 1e-4 * step * slope {
                    accepted = Some(cand);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(next) = accepted else { break };
        let Some((fn_, gn)) = neg_grad(next) else { break };
        let s = [next[0] - theta[0], next[1] - theta[1], next[2] - theta[2]];
        let yv = [gn[0] - g[0], gn[1] - g[1], gn[2] - g[2]];
        let sy: f64 = (0..3).map(|i| s[i] * yv[i]).sum();
        if sy > 1e-12 {
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let mut hy = [0.0; 3];
            for i in 0..3 {
                hy[i] = (0..3).map(|j| hinv[i][j] * yv[j]).sum();
            }
            let yhy: f64 = (0..3).map(|i| yv[i] * hy[i]).sum();
            for i in 0..3 {
                for j in 0..3 {
                    hinv[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        let converged = (f - fn_).abs() < 1e-10 * (1.0 + f.abs());
        theta = next;
        f = fn_;
        g = gn;
        if converged || gn.iter().all(|x| x.abs() < 1e-7) {
            break;
        }
    }
    Some((theta, -f))
}

/// Fits hyperparameters by maximum marginal likelihood, then conditions on
/// all rows. Deterministic for a fixed `options.seed`.
pub fn gp_fit(x: &Matrix, y: &[f64], options: &GpFitOptions) -> Result<GpModel> {
    if x.rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} input rows but {} outputs",
            x.rows(),
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidArgument("GP fit needs at least two rows".into()));
    }
    let prior_mean = if options.constant_mean {
        y.iter().sum::<f64>() / y.len() as f64
    } else {
        0.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (x_opt, y_opt) = if y.len() > options.max_opt_rows.max(2) {
        let mut idx: Vec<usize> = (0..y.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(options.max_opt_rows.max(2));
        idx.sort_unstable();
        (x.select_rows(&idx), idx.iter().map(|&i| y[i]).collect())
    } else {
        (x.clone(), y.to_vec())
    };
    let dist = pairwise_sq_dist(&x_opt);
    let base = options
        .init
        .map(|h| clamp_log(h.to_log()))
        .unwrap_or_else(|| moment_init(&x_opt, &y_opt, prior_mean));
    let jitter = Normal::new(0.0, 0.5).expect("valid normal");
    let mut best: Option<([f64; 3], f64)> = None;
    for r in 0..options.restarts.max(1) {
        let start = if r == 0 {
            base
        } else {
            [
                base[0] + jitter.sample(&mut rng),
                base[1] + jitter.sample(&mut rng),
                base[2] + jitter.sample(&mut rng),
            ]
        };
        if let Some((theta, lml)) = maximize(&dist, &y_opt, prior_mean, start, options.max_iter) {
            if best.is_none_or(|(_, b)| lml > b) {
                best = Some((theta, lml));
            }
        }
    }
    let (theta, _) = best.ok_or_else(|| Error::Numerical("every GP restart diverged".into()))?;
    GpModel::condition(x.clone(), y.to_vec(), GpHyperparams::from_log(theta), prior_mean)
}
