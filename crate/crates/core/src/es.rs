//! The expected-signature regression model ES(p, q, n, m).
//!
//! The degree-`n` signature of the last `p + 1` observations is regressed,
//! linearly, onto either the next value (reduced mode) or the degree-`m`
//! signature of the next `q` observations (tensor mode). The conditional
//! covariance of future signature coordinates follows from the predicted
//! mean through the shuffle product.

use serde::{Deserialize, Serialize};

use crate::embedding::{rebase_window, Embedding, RebasePolicy, TimeSeries};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regression::{ols, FitStats};
use crate::signature::signature_with_embedding;
use crate::tensor::{shuffle_words, tensor_size, TruncatedTensor, Word};

/// What the model predicts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    /// The scalar `r_{k+1}`.
    #[default]
    Reduced,
    /// Every coordinate of the degree-`m` signature of the next `q` points.
    Tensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsSpec {
    /// Past window holds `p + 1` observations.
    pub p: usize,
    /// Future window length.
    pub q: usize,
    /// Truncation degree of the past signature.
    pub n: usize,
    /// Truncation degree of the future signature (tensor mode).
    pub m: usize,
    #[serde(default)]
    pub embedding: Embedding,
    #[serde(default)]
    pub rebase: RebasePolicy,
    #[serde(default)]
    pub mode: TargetMode,
    #[serde(default)]
    pub ridge: f64,
}

impl Default for EsSpec {
    fn default() -> Self {
        EsSpec {
            p: 2,
            q: 1,
            n: 3,
            m: 2,
            embedding: Embedding::TimeJoined,
            rebase: RebasePolicy::Shift,
            mode: TargetMode::Reduced,
            ridge: 0.0,
        }
    }
}

impl EsSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p < 1 || self.q < 1 || self.n < 1 || self.m < 1 {
            return Err(Error::InvalidArgument(
                "p, q, n and m must all be at least 1".into(),
            ));
        }
        if self.mode == TargetMode::Reduced && self.q != 1 {
            return Err(Error::InvalidArgument(
                "reduced mode predicts r_{k+1} and needs q = 1".into(),
            ));
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        tensor_size(2, self.n)
    }

    pub fn target_count(&self) -> usize {
        match self.mode {
            TargetMode::Reduced => 1,
            TargetMode::Tensor => tensor_size(2, self.m),
        }
    }

    /// Words labelling the feature columns.
    pub fn feature_words(&self) -> Vec<Word> {
        Word::all(2, self.n)
    }

    /// Signature features of a window of exactly `p + 1` points.
    pub fn window_features(&self, window: &TimeSeries) -> Vec<f64> {
        let w = rebase_window(window, self.rebase);
        signature_with_embedding(&w, self.n, self.embedding).into_coeffs()
    }

    fn future_targets(&self, ts: &TimeSeries, k: usize) -> Result<Vec<f64>> {
        Ok(match self.mode {
            TargetMode::Reduced => vec![ts.values()[k + 1]],
            TargetMode::Tensor => {
                let fut = rebase_window(&ts.slice(k + 1, k + 1 + self.q)?, self.rebase);
                signature_with_embedding(&fut, self.m, self.embedding).into_coeffs()
            }
        })
    }
}

/// Design matrices of an ES regression.
#[derive(Clone, Debug)]
pub struct FeatureSet {
    pub features: Matrix,
    pub targets: Matrix,
    /// Index `k` of the last past observation of each row.
    pub window_index: Vec<usize>,
}

pub fn build_feature_matrix(ts: &TimeSeries, spec: &EsSpec) -> Result<FeatureSet> {
    spec.validate()?;
    let needed = spec.p + spec.q + 1;
    if ts.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: ts.len(),
        });
    }
    let window_index: Vec<usize> = (spec.p..ts.len() - spec.q).collect();
    let mut features = Vec::with_capacity(window_index.len() * spec.feature_count());
    let mut targets = Vec::with_capacity(window_index.len() * spec.target_count());
    for &k in &window_index {
        features.extend(spec.window_features(&ts.slice(k - spec.p, k + 1)?));
        targets.extend(spec.future_targets(ts, k)?);
    }
    Ok(FeatureSet {
        features: Matrix::from_vec(window_index.len(), spec.feature_count(), features)?,
        targets: Matrix::from_vec(window_index.len(), spec.target_count(), targets)?,
        window_index,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub rows: usize,
    /// Feature columns retained (intercept excluded).
    pub rank: usize,
    /// Feature words dropped as constant or linearly dependent.
    pub dropped: Vec<Word>,
    /// One entry per target coordinate.
    pub stats: Vec<FitStats>,
}

/// A calibrated ES model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedEsModel {
    pub spec: EsSpec,
    pub feature_words: Vec<Word>,
    /// Empty in reduced mode.
    pub target_words: Vec<Word>,
    /// `targets × features`; column 0 (the empty word) carries the intercept.
    pub coefficients: Matrix,
    pub diagnostics: FitDiagnostics,
}

/// Output of [`FittedEsModel::predict_mean`].
#[derive(Clone, Debug, PartialEq)]
pub enum MeanPrediction {
    Scalar(f64),
    Tensor(TruncatedTensor),
}

impl MeanPrediction {
    /// The predicted next value `m_k` (read off `π^{(2)}` in tensor mode).
    pub fn next_value(&self) -> f64 {
        match self {
            MeanPrediction::Scalar(x) => *x,
            MeanPrediction::Tensor(mu) => mu.coeff(&[2]).expect("degree ≥ 1"),
        }
    }
}

impl FittedEsModel {
    /// Least-squares fit on a series.
    pub fn fit(ts: &TimeSeries, spec: &EsSpec) -> Result<Self> {
        let set = build_feature_matrix(ts, spec)?;
        Self::fit_features(&set.features, &set.targets, spec)
    }

    /// Least-squares fit on precomputed feature/target rows.
    pub fn fit_features(features: &Matrix, targets: &Matrix, spec: &EsSpec) -> Result<Self> {
        spec.validate()?;
        if features.cols() != spec.feature_count() || targets.cols() != spec.target_count() {
            return Err(Error::ShapeMismatch(
                features.cols(),
                targets.cols(),
                spec.feature_count(),
                spec.target_count(),
            ));
        }
        // column 0 is the constant π^{()} and plays the intercept
        let cols = features.cols();
        let mut regressors = Matrix::zeros(features.rows(), cols - 1);
        for i in 0..features.rows() {
            regressors.row_mut(i).copy_from_slice(&features.row(i)[1..]);
        }
        let fit = ols(&regressors, targets, spec.ridge)?;
        let feature_words = spec.feature_words();
        let mut coefficients = Matrix::zeros(targets.cols(), cols);
        for t in 0..targets.cols() {
            coefficients[(t, 0)] = fit.intercepts[t];
            for j in 1..cols {
                coefficients[(t, j)] = fit.slopes[(j - 1, t)];
            }
        }
        let target_words = match spec.mode {
            TargetMode::Reduced => Vec::new(),
            TargetMode::Tensor => Word::all(2, spec.m),
        };
        Ok(FittedEsModel {
            spec: spec.clone(),
            diagnostics: FitDiagnostics {
                rows: features.rows(),
                rank: fit.rank,
                dropped: fit
                    .dropped
                    .iter()
                    .map(|&j| feature_words[j + 1].clone())
                    .collect(),
                stats: fit.stats,
            },
            feature_words,
            target_words,
            coefficients,
        })
    }

    /// Coefficient matrix applied to a feature vector.
    pub fn predict_features(&self, features: &[f64]) -> Vec<f64> {
        self.coefficients.matvec(features)
    }

    /// Conditional mean given a window of exactly `p + 1` observations.
    pub fn predict_mean(&self, window: &TimeSeries) -> Result<MeanPrediction> {
        if window.len() != self.spec.p + 1 {
            return Err(Error::InvalidArgument(format!(
                "window has {} points, model expects {}",
                window.len(),
                self.spec.p + 1
            )));
        }
        let out = self.predict_features(&self.spec.window_features(window));
        Ok(match self.spec.mode {
            TargetMode::Reduced => MeanPrediction::Scalar(out[0]),
            TargetMode::Tensor => {
                let mut mu = TruncatedTensor::from_flat(2, self.spec.m, out)?;
                mu.level_mut(0)[0] = 1.0;
                MeanPrediction::Tensor(mu)
            }
        })
    }

    /// Predictions for every admissible window of `ts`, keyed by the index of
    /// the window's last observation.
    pub fn predict_series(&self, ts: &TimeSeries) -> Result<Vec<(usize, MeanPrediction)>> {
        let p = self.spec.p;
        if ts.len() < p + 1 {
            return Err(Error::SeriesTooShort {
                needed: p + 1,
                got: ts.len(),
            });
        }
        (p..ts.len())
            .map(|k| Ok((k, self.predict_mean(&ts.slice(k - p, k + 1)?)?)))
            .collect()
    }

    /// In-sample R² of the first target coordinate that varies.
    pub fn r2(&self) -> f64 {
        self.primary_stats().r2
    }

    pub fn adj_r2(&self) -> f64 {
        self.primary_stats().adj_r2
    }

    fn primary_stats(&self) -> &FitStats {
        match self.spec.mode {
            TargetMode::Reduced => &self.diagnostics.stats[0],
            // coordinate (2) is the next value
            TargetMode::Tensor => &self.diagnostics.stats[2],
        }
    }
}

/// `Σ²(I, J) = (π^I ⧢ π^J)(μ) − π^I(μ) π^J(μ)`.
pub fn induced_covariance(mu: &TruncatedTensor, i: &Word, j: &Word) -> Result<f64> {
    if i.len() + j.len() > mu.degree() {
        return Err(Error::DegreeTooLow {
            requested: i.len() + j.len(),
            available: mu.degree(),
        });
    }
    Ok(shuffle_words(i, j, mu.dim()).apply(mu)? - mu.project(i)? * mu.project(j)?)
}

/// Conditional mean and variance of the next value from the expected
/// signature `μ` of the one-step future: `(π^{(2)}(μ), 2π^{(2,2)}(μ) − π^{(2)}(μ)²)`.
pub fn moments_from_mu(mu: &TruncatedTensor) -> Result<(f64, f64)> {
    if mu.degree() < 2 {
        return Err(Error::DegreeTooLow {
            requested: 2,
            available: mu.degree(),
        });
    }
    let mean = mu.coeff(&[2])?;
    let var = 2.0 * mu.coeff(&[2, 2])? - mean * mean;
    Ok((mean, var))
}
