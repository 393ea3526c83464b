//! Cross-validation of mean predictors, the diffusion study, and report
//! output.
//!
//! Cross-validation is repeated random sub-sampling: every repetition holds
//! out a random subset of windows, fits on the rest and scores the
//! predicted mean against the true conditional mean.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::ar::{lag_matrix, ArModel};
use crate::baselines::gp::{gp_fit, GpFitOptions};
use crate::datagen::{gen_diffusion, DiffusionConfig, LabeledSeries};
use crate::embedding::{read_columns, PiecewiseLinearPath, TimeSeries};
use crate::error::{Error, Result};
use crate::es::{EsSpec, FittedEsModel, TargetMode};
use crate::linalg::Matrix;
use crate::regression::{fit_stats, ols};
use crate::signature::signature;
use crate::tensor::tensor_size;

/// A mean predictor taking part in a comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelConfig {
    Ar {
        p: usize,
    },
    Es(EsSpec),
    Gp {
        p: usize,
        #[serde(default)]
        options: GpFitOptions,
    },
    /// Returns the recorded true mean; scores zero by construction.
    TrueMean,
    /// Always predicts 0.
    Zero,
}

impl ModelConfig {
    pub fn name(&self) -> String {
        match self {
            ModelConfig::Ar { p } => format!("AR({p})"),
            ModelConfig::Es(s) => format!("ES({},{},{},{})", s.p, s.q, s.n, s.m),
            ModelConfig::Gp { p, .. } => format!("GP({p})"),
            ModelConfig::TrueMean => "true-mean".into(),
            ModelConfig::Zero => "zero".into(),
        }
    }

    /// Observations needed before (and including) the prediction point.
    fn window(&self) -> usize {
        match self {
            ModelConfig::Ar { p } | ModelConfig::Gp { p, .. } => *p,
            ModelConfig::Es(s) => s.p + 1,
            ModelConfig::TrueMean | ModelConfig::Zero => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValConfig {
    /// Number of random sub-sampling repetitions.
    pub folds: usize,
    /// Fraction of windows held out per repetition.
    pub holdout: f64,
    pub seed: u64,
    /// Also fit every model on all windows to report in-sample R².
    #[serde(default = "yes")]
    pub in_sample: bool,
}

fn yes() -> bool {
    true
}

impl Default for CrossValConfig {
    fn default() -> Self {
        CrossValConfig {
            folds: 20,
            holdout: 0.2,
            seed: 0,
            in_sample: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    /// In-sample R² against the realized next values.
    pub r2: Option<f64>,
    pub adj_r2: Option<f64>,
    pub mse_mean: f64,
    pub mse_std: f64,
    /// Mean wall-clock seconds of fit + predict per repetition.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub model: String,
    pub fold: usize,
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: CrossValConfig,
    pub models: Vec<ModelReport>,
    pub folds: Vec<FoldRecord>,
}

/// Per-window inputs of one model, computed once for all folds.
enum Design {
    Es { spec: EsSpec, features: Matrix },
    Lags { p: usize, x: Matrix, gp: Option<GpFitOptions> },
    TrueMean,
    Zero,
}

struct Prepared {
    design: Design,
    /// Realized next values `r_{k+1}`.
    next: Vec<f64>,
}

impl Prepared {
    fn new(cfg: &ModelConfig, ts: &TimeSeries, index: &[usize]) -> Result<Self> {
        let r = ts.values();
        let next: Vec<f64> = index.iter().map(|&k| r[k + 1]).collect();
        let design = match cfg {
            ModelConfig::Es(spec) => {
                spec.validate()?;
                if spec.mode != TargetMode::Reduced {
                    return Err(Error::InvalidArgument(
                        "cross-validation scores next-value means; use reduced mode".into(),
                    ));
                }
                let mut data = Vec::with_capacity(index.len() * spec.feature_count());
                for &k in index {
                    data.extend(spec.window_features(&ts.slice(k - spec.p, k + 1)?));
                }
                Design::Es {
                    spec: spec.clone(),
                    features: Matrix::from_vec(index.len(), spec.feature_count(), data)?,
                }
            }
            ModelConfig::Ar { p } | ModelConfig::Gp { p, .. } => {
                if *p == 0 {
                    return Err(Error::InvalidArgument("lag order must be ≥ 1".into()));
                }
                let gp = match cfg {
                    ModelConfig::Gp { options, .. } => Some(options.clone()),
                    _ => None,
                };
                Design::Lags {
                    p: *p,
                    x: lag_matrix(r, *p, index)?,
                    gp,
                }
            }
            ModelConfig::TrueMean => Design::TrueMean,
            ModelConfig::Zero => Design::Zero,
        };
        Ok(Prepared { design, next })
    }

    /// Fits on rows `train` and predicts rows `test`.
    fn fit_predict(&self, train: &[usize], test: &[usize], truth: &[f64], seed: u64) -> Result<(Vec<f64>, usize)> {
        let y: Vec<f64> = train.iter().map(|&i| self.next[i]).collect();
        Ok(match &self.design {
            Design::Es { spec, features } => {
                let model = FittedEsModel::fit_features(
                    &features.select_rows(train),
                    &Matrix::column_vector(&y),
                    spec,
                )?;
                let pred = test
                    .iter()
                    .map(|&i| model.predict_features(features.row(i))[0])
                    .collect();
                (pred, model.diagnostics.rank)
            }
            Design::Lags { p, x, gp: None } => {
                let model = ArModel::fit_design(&x.select_rows(train), &y)?;
                (test.iter().map(|&i| model.predict(x.row(i))).collect(), *p)
            }
            Design::Lags { p, x, gp: Some(opts) } => {
                let opts = GpFitOptions {
                    seed: opts.seed ^ seed,
                    ..opts.clone()
                };
                let model = gp_fit(&x.select_rows(train), &y, &opts)?;
                (test.iter().map(|&i| model.predict_mean(x.row(i))).collect(), *p)
            }
            Design::TrueMean => (test.iter().map(|&i| truth[i]).collect(), 0),
            Design::Zero => (vec![0.0; test.len()], 0),
        })
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Holdout rows of repetition `fold`; the remaining rows are for training.
pub fn fold_split(rows: usize, holdout: f64, seed: u64, fold: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(fold as u64));
    let mut idx: Vec<usize> = (0..rows).collect();
    idx.shuffle(&mut rng);
    let m = ((holdout * rows as f64).round() as usize).clamp(1, rows.saturating_sub(1).max(1));
    let mut test = idx[..m].to_vec();
    let mut train = idx[m..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

/// Repeated random sub-sampling validation of every model on a shared set of
/// windows.
pub fn run_crossval(data: &LabeledSeries, models: &[ModelConfig], cv: &CrossValConfig) -> Result<ExperimentReport> {
    if cv.folds == 0 {
        return Err(Error::InvalidArgument("at least one fold is required".into()));
    }
    if !(cv.holdout > 0.0 && cv.holdout < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction must lie in (0, 1), got {}",
            cv.holdout
        )));
    }
    let len = data.ts.len();
    if data.true_means.len() != len {
        return Err(Error::InvalidArgument("true means do not match the series".into()));
    }
    let window = models.iter().map(ModelConfig::window).max().unwrap_or(1);
    // windows end at k and predict r_{k+1}
    let index: Vec<usize> = (window.saturating_sub(1)..len.saturating_sub(1)).collect();
    if index.len() < 10 {
        return Err(Error::SeriesTooShort {
            needed: window + 10,
            got: len,
        });
    }
    let truth: Vec<f64> = index.iter().map(|&k| data.true_means[k]).collect();
    let mut report = ExperimentReport {
        config: cv.clone(),
        models: Vec::new(),
        folds: Vec::new(),
    };
    for cfg in models {
        let name = cfg.name();
        let prepared = Prepared::new(cfg, &data.ts, &index)?;
        let mut mses = Vec::with_capacity(cv.folds);
        let mut seconds = 0.0;
        for fold in 0..cv.folds {
            let (train, test) = fold_split(index.len(), cv.holdout, cv.seed, fold);
            let clock = Instant::now();
            let (pred, _) = prepared.fit_predict(&train, &test, &truth, cv.seed.wrapping_add(fold as u64))?;
            seconds += clock.elapsed().as_secs_f64();
            let mse = test
                .iter()
                .zip(&pred)
                .map(|(&i, p)| (p - truth[i]).powi(2))
                .sum::<f64>()
                / test.len() as f64;
            report.folds.push(FoldRecord {
                model: name.clone(),
                fold,
                mse,
            });
            mses.push(mse);
        }
        let (r2, adj_r2) = if cv.in_sample {
            let all: Vec<usize> = (0..index.len()).collect();
            let (fitted, regressors) = prepared.fit_predict(&all, &all, &truth, cv.seed)?;
            let s = fit_stats(&prepared.next, &fitted, regressors);
            (Some(s.r2), Some(s.adj_r2))
        } else {
            (None, None)
        };
        let (mse_mean, mse_std) = mean_std(&mses);
        report.models.push(ModelReport {
            model: name,
            r2,
            adj_r2,
            mse_mean,
            mse_std,
            seconds: seconds / cv.folds as f64,
        });
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::InvalidArgument(format!("not a number: {s:?}")))
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("not a number: {s:?}")))
}

impl ExperimentReport {
    /// `model,r2,adj_r2,mse_mean,mse_std`; wall-clock time is kept out so the
    /// file is reproducible.
    pub fn write_metrics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "r2", "adj_r2", "mse_mean", "mse_std"])?;
        for m in &self.models {
            w.write_record([
                m.model.clone(),
                opt(m.r2),
                opt(m.adj_r2),
                m.mse_mean.to_string(),
                m.mse_std.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `model,fold,mse`: one row per repetition, the data behind a per-fold plot.
    pub fn write_folds_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "fold", "mse"])?;
        for f in &self.folds {
            w.write_record([f.model.clone(), f.fold.to_string(), f.mse.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `model,seconds` plus the ES/GP time ratio when both are present.
    pub fn write_timing_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "seconds"])?;
        for m in &self.models {
            w.write_record([m.model.clone(), m.seconds.to_string()])?;
        }
        if let Some(ratio) = self.es_gp_time_ratio() {
            w.write_record(["ES/GP".to_string(), ratio.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn es_gp_time_ratio(&self) -> Option<f64> {
        let find = |prefix: &str| self.models.iter().find(|m| m.model.starts_with(prefix)).map(|m| m.seconds);
        Some(find("ES(")? / find("GP(")?)
    }

    /// Metrics parsed back from [`ExperimentReport::write_metrics_csv`];
    /// timings are zero.
    pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<ModelReport>> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::InvalidArgument(format!("expected 5 fields, got {}", rec.len())));
            }
            out.push(ModelReport {
                model: rec[0].to_string(),
                r2: parse_opt(&rec[1])?,
                adj_r2: parse_opt(&rec[2])?,
                mse_mean: parse_num(&rec[3])?,
                mse_std: parse_num(&rec[4])?,
                seconds: 0.0,
            });
        }
        Ok(out)
    }

    pub fn read_folds_csv<R: Read>(reader: R) -> Result<Vec<FoldRecord>> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            out.push(FoldRecord {
                model: rec[0].to_string(),
                fold: parse_num(&rec[1])?,
                mse: parse_num(&rec[2])?,
            });
        }
        Ok(out)
    }

    /// Aligned tables for reading; wall-clock time is omitted.
    pub fn to_text(&self) -> String {
        let mut rows = vec![[
            "model".to_string(),
            "R2".to_string(),
            "adj. R2".to_string(),
            "MSE_cv mean".to_string(),
            "MSE_cv std".to_string(),
        ]];
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
        for m in &self.models {
            rows.push([
                m.model.clone(),
                fmt(m.r2),
                fmt(m.adj_r2),
                format!("{:.6e}", m.mse_mean),
                format!("{:.6e}", m.mse_std),
            ]);
        }
        let mut widths = [0usize; 5];
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = format!(
            "repetitions: {}  holdout: {}  seed: {}\n",
            self.config.folds, self.config.holdout, self.config.seed
        );
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionStudyConfig {
    pub diffusion: DiffusionConfig,
    pub degrees: Vec<usize>,
    /// Leading share of samples used for training; the rest is the backtest.
    pub train_fraction: f64,
}

impl Default for DiffusionStudyConfig {
    fn default() -> Self {
        DiffusionStudyConfig {
            diffusion: DiffusionConfig::default(),
            degrees: vec![2, 4, 6],
            train_fraction: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionRow {
    pub degree: usize,
    pub r2_train: f64,
    pub r2_backtest: f64,
}

/// Regresses `Y_T` on the truncated signature of its driver `(t, W)` for
/// each degree and scores the fit on the held-back tail of the samples.
pub fn run_diffusion_study(cfg: &DiffusionStudyConfig) -> Result<(Vec<DiffusionRow>, usize)> {
    let max_degree = cfg.degrees.iter().copied().max().unwrap_or(0);
    if cfg.degrees.contains(&0) {
        return Err(Error::InvalidArgument("degrees must be ≥ 1".into()));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::InvalidArgument("train fraction must lie in (0, 1)".into()));
    }
    let data = gen_diffusion(&cfg.diffusion)?;
    let n = data.samples.len();
    let split = (cfg.train_fraction * n as f64).round() as usize;
    if split < 2 || n - split < 2 {
        return Err(Error::InvalidArgument("too few samples for an 80/20 split".into()));
    }
    let width = tensor_size(2, max_degree);
    let mut sigs = Vec::with_capacity(n * width);
    let mut y = Vec::with_capacity(n);
    for s in &data.samples {
        let path = PiecewiseLinearPath::new(s.path.iter().map(|p| p.to_vec()).collect())?;
        sigs.extend(signature(&path, max_degree).into_coeffs());
        y.push(s.y_terminal);
    }
    let mut rows = Vec::new();
    for &deg in &cfg.degrees {
        let cols = tensor_size(2, deg) - 1;
        let x = Matrix::from_vec(
            n,
            cols,
            (0..n).flat_map(|i| sigs[i * width + 1..i * width + 1 + cols].iter().copied()).collect(),
        )?;
        let train: Vec<usize> = (0..split).collect();
        let test: Vec<usize> = (split..n).collect();
        let fit = ols(&x.select_rows(&train), &Matrix::column_vector(&y[..split]), 0.0)?;
        let pred: Vec<f64> = test.iter().map(|&i| fit.predict_row(x.row(i))[0]).collect();
        let backtest = fit_stats(&y[split..], &pred, fit.rank);
        rows.push(DiffusionRow {
            degree: deg,
            r2_train: fit.stats[0].r2,
            r2_backtest: backtest.r2,
        });
    }
    Ok((rows, data.resampled))
}

pub fn write_diffusion_csv<W: Write>(rows: &[DiffusionRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["degree", "r2_train", "r2_backtest"])?;
    for r in rows {
        w.write_record([r.degree.to_string(), r.r2_train.to_string(), r.r2_backtest.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diffusion_csv<R: Read>(reader: R) -> Result<Vec<DiffusionRow>> {
    let cols = read_columns(reader, &["degree", "r2_train", "r2_backtest"])?;
    Ok((0..cols[0].len())
        .map(|i| DiffusionRow {
            degree: cols[0][i] as usize,
            r2_train: cols[1][i],
            r2_backtest: cols[2][i],
        })
        .collect())
}
