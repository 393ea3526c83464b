//! Seeded synthetic processes: AR, polynomial AR, a two-regime mixture of
//! polynomial ARs, ARCH, and a Stratonovich diffusion driven by `(t, W_t)`.
//!
//! Every series lives on the integer grid `t = 0, 1, 2, …` and carries the
//! conditional mean `m_t = E[r_{t+1} | F_t]` at every step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};

/// Values beyond this magnitude abort generation.
pub const OVERFLOW_LIMIT: f64 = 1e8;

/// The process to simulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `m_t = Φ_0 + Φ_1 r_t + … + Φ_p r_{t-p+1}`.
    Ar {
        #[serde(default = "default_phi")]
        phi: Vec<f64>,
    },
    /// `m_t = 0.2 r_{t-2} + 0.1 r_t (r_{t-1} - r_t)`.
    PolyAr,
    /// `m_t = -0.6 r_{t-2} - 0.15 r_{t-1} + c r_t - 0.015 r_{t-1}²` with
    /// `c = 0.4` when `r_t > 0` and `c = 0.8` otherwise.
    MixPolyAr,
    /// `r_k = μ_k + σ_k z_k`, `μ_k = β_0 + Σ β_i r_{k-i}`,
    /// `σ_k² = α_0 + Σ α_i ε_{k-i}²`. The noise scale `sigma` is not used.
    Arch { beta: Vec<f64>, alpha: Vec<f64> },
}

fn default_phi() -> Vec<f64> {
    vec![0.0, 0.6, 0.15, -0.1]
}

impl GeneratorKind {
    pub fn default_ar() -> Self {
        GeneratorKind::Ar { phi: default_phi() }
    }

    /// Number of past values the conditional law depends on.
    fn lags(&self) -> usize {
        match self {
            GeneratorKind::Ar { phi } => phi.len().saturating_sub(1),
            GeneratorKind::PolyAr | GeneratorKind::MixPolyAr => 3,
            GeneratorKind::Arch { beta, alpha } => {
                beta.len().saturating_sub(1).max(alpha.len().saturating_sub(1))
            }
        }
    }
}

/// `0.2 r_{t-2} + 0.1 r_t (r_{t-1} - r_t)` for `state = (r_t, r_{t-1}, r_{t-2})`.
pub fn poly_ar_mean(state: [f64; 3]) -> f64 {
    let [r0, r1, r2] = state;
    0.2 * r2 + 0.1 * r0 * (r1 - r0)
}

/// Regime-switching mean for `state = (r_t, r_{t-1}, r_{t-2})`.
pub fn mix_poly_ar_mean(state: [f64; 3]) -> f64 {
    let [r0, r1, r2] = state;
    let c = if r0 > 0.0 { 0.4 } else { 0.8 };
    -0.6 * r2 - 0.15 * r1 + c * r0 - 0.015 * r1 * r1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    /// Number of observations kept.
    pub length: usize,
    /// Innovation scale `σ` in `r_{t+1} = m_t + σ ε_t`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Steps simulated and discarded before the first kept observation.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Starting history, most recent last; zeros when absent.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
}

fn default_sigma() -> f64 {
    0.7
}

fn default_burn_in() -> usize {
    200
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind, length: usize, seed: u64) -> Self {
        GeneratorConfig {
            kind,
            length,
            sigma: default_sigma(),
            seed,
            burn_in: default_burn_in(),
            init: None,
        }
    }
}

/// A simulated series with its conditional moments.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSeries {
    pub ts: TimeSeries,
    /// `true_means[t] = E[r_{t+1} | F_t]`.
    pub true_means: Vec<f64>,
    /// `true_variances[t] = Var[r_{t+1} | F_t]`.
    pub true_variances: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LabeledSeries {
    /// CSV with header `t,r,m_true`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "r", "m_true"])?;
        for ((t, r), m) in self.ts.points().zip(&self.true_means) {
            w.write_record([t.to_string(), r.to_string(), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the layout written by [`LabeledSeries::write_csv`].
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let cols = crate::embedding::read_columns(reader, &["t", "r", "m_true"])?;
        let mut it = cols.into_iter();
        let (t, r, m) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        let n = m.len();
        Ok(LabeledSeries {
            ts: TimeSeries::new(t, r)?,
            true_means: m,
            true_variances: vec![f64::NAN; n],
            warnings: Vec::new(),
        })
    }
}

/// Whether every root of `z^p - φ_1 z^{p-1} - … - φ_p` lies strictly inside
/// the unit disk (Schur–Cohn step-down recursion).
pub fn ar_is_stable(lag_coefficients: &[f64]) -> bool {
    let mut a: Vec<f64> = std::iter::once(1.0)
        .chain(lag_coefficients.iter().map(|c| -c))
        .collect();
    while a.len() > 1 {
        let k = a.len() - 1;
        let kappa = a[k];
        if kappa.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - kappa * kappa;
        a = (0..k).map(|i| (a[i] - kappa * a[k - i]) / denom).collect();
    }
    true
}

fn check_config(cfg: &GeneratorConfig) -> Result<Vec<String>> {
    if cfg.length == 0 {
        return Err(Error::InvalidArgument("series length must be positive".into()));
    }
    if !(cfg.sigma >= 0.0) || !cfg.sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be ≥ 0, got {}", cfg.sigma)));
    }
    let mut warnings = Vec::new();
    match &cfg.kind {
        GeneratorKind::Ar { phi } => {
            if phi.is_empty() {
                return Err(Error::InvalidArgument("AR needs at least Φ_0".into()));
            }
            if !ar_is_stable(&phi[1..]) {
                warnings.push("AR coefficients are not stationary (companion spectral radius ≥ 1)".into());
            }
        }
        GeneratorKind::Arch { beta, alpha } => {
            if beta.is_empty() || alpha.is_empty() {
                return Err(Error::InvalidArgument("ARCH needs β_0 and α_0".into()));
            }
            if !(alpha[0] > 0.0) {
                return Err(Error::InvalidArgument("ARCH needs α_0 > 0".into()));
            }
            if alpha[1..].iter().any(|a| !(*a >= 0.0)) {
                return Err(Error::InvalidArgument("ARCH needs α_i ≥ 0".into()));
            }
            if alpha[1..].iter().sum::<f64>() >= 1.0 {
                warnings.push("ARCH coefficients sum to ≥ 1: unconditional variance is infinite".into());
            }
            if !ar_is_stable(&beta[1..]) {
                warnings.push("ARCH mean coefficients are not stationary".into());
            }
        }
        GeneratorKind::PolyAr | GeneratorKind::MixPolyAr => {}
    }
    Ok(warnings)
}

/// Simulates the configured process. Identical configurations give
/// bit-identical output.
pub fn generate(cfg: &GeneratorConfig) -> Result<LabeledSeries> {
    let warnings = check_config(cfg)?;
    let lags = cfg.kind.lags().max(1);
    let mut hist: Vec<f64> = vec![0.0; lags];
    if let Some(init) = &cfg.init {
        let take = init.len().min(lags);
        hist[lags - take..].copy_from_slice(&init[init.len() - take..]);
    }
    // innovations ε of the ARCH recursion, aligned with `hist`
    let mut eps: Vec<f64> = vec![0.0; lags];
    let total = cfg.burn_in + cfg.length;
    let mut values = Vec::with_capacity(total);
    let mut means = Vec::with_capacity(total);
    let mut vars = Vec::with_capacity(total);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut mean, mut var) = conditional_moments(&cfg.kind, cfg.sigma, &hist, &eps);
    for step in 0..total {
        let z: f64 = StandardNormal.sample(&mut rng);
        let e = var.sqrt() * z;
        let r = mean + e;
        if !r.is_finite() || r.abs() > OVERFLOW_LIMIT {
            return Err(Error::Numerical(format!(
                "series left the range ±{OVERFLOW_LIMIT:e} at step {step}"
            )));
        }
        hist.remove(0);
        hist.push(r);
        eps.remove(0);
        eps.push(e);
        (mean, var) = conditional_moments(&cfg.kind, cfg.sigma, &hist, &eps);
        values.push(r);
        means.push(mean);
        vars.push(var);
    }
    let keep = cfg.burn_in..total;
    Ok(LabeledSeries {
        ts: TimeSeries::uniform(values[keep.clone()].to_vec())?,
        true_means: means[keep.clone()].to_vec(),
        true_variances: vars[keep].to_vec(),
        warnings,
    })
}

/// Mean and variance of the next value given histories ordered oldest first.
fn conditional_moments(kind: &GeneratorKind, sigma: f64, hist: &[f64], eps: &[f64]) -> (f64, f64) {
    let lag = |i: usize| hist[hist.len() - 1 - i];
    let state = || [lag(0), lag(1), lag(2)];
    match kind {
        GeneratorKind::Ar { phi } => {
            let m = phi[0] + phi[1..].iter().enumerate().map(|(i, c)| c * lag(i)).sum::<f64>();
            (m, sigma * sigma)
        }
        GeneratorKind::PolyAr => (poly_ar_mean(state()), sigma * sigma),
        GeneratorKind::MixPolyAr => (mix_poly_ar_mean(state()), sigma * sigma),
        GeneratorKind::Arch { beta, alpha } => {
            let m = beta[0] + beta[1..].iter().enumerate().map(|(i, c)| c * lag(i)).sum::<f64>();
            let v = alpha[0]
                + alpha[1..]
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * eps[eps.len() - 1 - i].powi(2))
                    .sum::<f64>();
            (m, v)
        }
    }
}

/// `dY = a (1 - Y) dt + b Y² ∘ dW`, `Y_0 = y0`, on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub samples: usize,
    pub horizon: f64,
    /// Grid intervals; the step is `horizon / steps`.
    pub steps: usize,
    pub a: f64,
    pub b: f64,
    pub y0: f64,
    pub seed: u64,
    /// Paths whose `|Y|` exceeds this are redrawn.
    pub max_abs: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            samples: 2000,
            horizon: 0.25,
            steps: 500,
            a: 1.0,
            b: 2.0,
            y0: 0.0,
            seed: 0,
            max_abs: 1e6,
        }
    }
}

/// One simulated driver `(t_i, W_{t_i})` and the terminal response.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSample {
    pub path: Vec<[f64; 2]>,
    pub y_terminal: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionData {
    pub samples: Vec<DiffusionSample>,
    /// Paths discarded because `Y` blew up.
    pub resampled: usize,
}

/// Heun (Stratonovich-consistent) integration of `dY = a(1-Y)dt + bY² dW`
/// over the increments `dw`, each spanning `dt`. `None` once `|Y| > max_abs`.
pub fn heun_terminal(a: f64, b: f64, y0: f64, dt: f64, dw: &[f64], max_abs: f64) -> Option<f64> {
    let drift = |y: f64, w: f64| a * (1.0 - y) * dt + b * y * y * w;
    let mut y = y0;
    for &w in dw {
        let f0 = drift(y, w);
        let pred = y + f0;
        y += 0.5 * (f0 + drift(pred, w));
        if !y.is_finite() || y.abs() > max_abs {
            return None;
        }
    }
    Some(y)
}

pub fn gen_diffusion(cfg: &DiffusionConfig) -> Result<DiffusionData> {
    if cfg.steps < 10 {
        return Err(Error::InvalidArgument(format!(
            "step must be at most horizon/10, got horizon/{}",
            cfg.steps
        )));
    }
    if !(cfg.horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let dt = cfg.horizon / cfg.steps as f64;
    let sd = dt.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.samples);
    let mut resampled = 0;
    let mut dw = vec![0.0; cfg.steps];
    while samples.len() < cfg.samples {
        for x in dw.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = sd * z;
        }
        match heun_terminal(cfg.a, cfg.b, cfg.y0, dt, &dw, cfg.max_abs) {
            Some(y) => {
                let mut path = Vec::with_capacity(cfg.steps + 1);
                let mut w = 0.0;
                path.push([0.0, 0.0]);
                for (i, x) in dw.iter().enumerate() {
                    w += x;
                    path.push([(i + 1) as f64 * dt, w]);
                }
                samples.push(DiffusionSample { path, y_terminal: y });
            }
            None => {
                resampled += 1;
                if resampled > 10 * cfg.samples.max(10) {
                    return Err(Error::Numerical(
                        "diffusion keeps exploding; reduce b or the horizon".into(),
                    ));
                }
            }
        }
    }
    Ok(DiffusionData { samples, resampled })
}
