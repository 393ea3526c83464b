use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regression::{ols, FitStats};

/// `r_{t+1} = Φ_0 + Φ_1 r_t + ... + Φ_p r_{t-p+1} + a_{t+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    /// `[Φ_0, Φ_1, ..., Φ_p]`.
    pub coefficients: Vec<f64>,
    /// Innovation variance estimate `σ_a²`.
    pub sigma2: f64,
    pub stats: FitStats,
}

/// Lag rows `[r_k, r_{k-1}, ..., r_{k-p+1}]` for each `k` in `indices`.
pub fn lag_matrix(values: &[f64], p: usize, indices: &[usize]) -> Result<Matrix> {
    let mut data = Vec::with_capacity(indices.len() * p);
    for &k in indices {
        if k + 1 < p || k >= values.len() {
            return Err(Error::InvalidArgument(format!(
                "index {k} has no {p} lags in a series of length {}",
                values.len()
            )));
        }
        data.extend((0..p).map(|i| values[k - i]));
    }
    Matrix::from_vec(indices.len(), p, data)
}

impl ArModel {
    pub fn fit(ts: &TimeSeries, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("AR order must be ≥ 1".into()));
        }
        let needed = 2 * p + 2;
        if ts.len() < needed {
            return Err(Error::SeriesTooShort {
                needed,
                got: ts.len(),
            });
        }
        let r = ts.values();
        let indices: Vec<usize> = (p - 1..r.len() - 1).collect();
        let x = lag_matrix(r, p, &indices)?;
        let y: Vec<f64> = indices.iter().map(|&k| r[k + 1]).collect();
        Self::fit_design(&x, &y)
    }

    /// Fits on precomputed lag rows (see [`lag_matrix`]) and next values.
    pub fn fit_design(lags: &Matrix, next: &[f64]) -> Result<Self> {
        let fit = ols(lags, &Matrix::column_vector(next), 0.0)?;
        if !fit.dropped.is_empty() {
            return Err(Error::RankDeficient {
                column: format!("lag {}", fit.dropped[0] + 1),
            });
        }
        let mut coefficients = vec![fit.intercepts[0]];
        coefficients.extend(fit.slopes.column(0));
        let stats = fit.stats[0].clone();
        Ok(ArModel {
            order: lags.cols(),
            coefficients,
            sigma2: stats.residual_variance,
            stats,
        })
    }

    /// One-step mean from lags ordered most recent first.
    pub fn predict(&self, lags: &[f64]) -> f64 {
        self.coefficients[0]
            + self.coefficients[1..]
                .iter()
                .zip(lags)
                .map(|(c, r)| c * r)
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn exact_recovery_when_targets_follow_the_mean() {
        let phi = [0.0, 0.6, 0.15, -0.1];
        let r = noise(200, 1);
        let indices: Vec<usize> = (2..199).collect();
        let x = lag_matrix(&r, 3, &indices).unwrap();
        let y: Vec<f64> = indices
            .iter()
            .map(|&k| phi[0] + phi[1] * r[k] + phi[2] * r[k - 1] + phi[3] * r[k - 2])
            .collect();
        let m = ArModel::fit_design(&x, &y).unwrap();
        for (a, b) in m.coefficients.iter().zip(phi) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let r = noise(300, 7);
        let ts = TimeSeries::uniform(r.clone()).unwrap();
        let m = ArModel::fit(&ts, 2).unwrap();
        let indices: Vec<usize> = (1..r.len() - 1).collect();
        let x = lag_matrix(&r, 2, &indices).unwrap();
        let resid: Vec<f64> = indices
            .iter()
            .enumerate()
            .map(|(i, &k)| r[k + 1] - m.predict(x.row(i)))
            .collect();
        let scale = dot(&resid, &resid).sqrt();
        assert!(resid.iter().sum::<f64>().abs() < 1e-8 * scale * 20.0);
        for j in 0..2 {
            let col = x.column(j);
            assert!(dot(&col, &resid).abs() < 1e-8 * scale * dot(&col, &col).sqrt());
        }
    }

    #[test]
    fn white_noise_gives_small_coefficients() {
        let r = noise(4000, 11);
        let m = ArModel::fit(&TimeSeries::uniform(r).unwrap(), 3).unwrap();
        // standard error ≈ 1/sqrt(N)
        let se = 1.0 / (4000f64).sqrt();
        for c in &m.coefficients {
            assert!(c.abs() < 3.0 * se, "coefficient {c}");
        }
        assert!((m.sigma2 - 1.0).abs() < 0.1);
    }

    #[test]
    fn input_checks() {
        let ts = TimeSeries::uniform(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(ArModel::fit(&ts, 1), Err(Error::SeriesTooShort { .. })));
        assert!(ArModel::fit(&ts, 0).is_err());
        let constant = TimeSeries::uniform(vec![1.0; 20]).unwrap();
        assert!(matches!(ArModel::fit(&constant, 2), Err(Error::RankDeficient { .. })));
    }
}
