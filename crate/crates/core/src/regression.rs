//! Ordinary least squares with an intercept, shared by the ES and AR models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, Matrix};

/// Relative threshold below which a (scaled, centered) column is treated as
/// a linear combination of the columns already chosen.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Goodness-of-fit figures for one target column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub r2: f64,
    pub adj_r2: f64,
    pub residual_variance: f64,
}

/// Intercept plus slopes for every target column.
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub intercepts: Vec<f64>,
    /// `regressors × targets`.
    pub slopes: Matrix,
    /// Number of regressors retained after rank detection (intercept excluded).
    pub rank: usize,
    /// Regressor columns dropped as numerically dependent.
    pub dropped: Vec<usize>,
    pub stats: Vec<FitStats>,
}

impl OlsFit {
    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        (0..self.intercepts.len())
            .map(|t| {
                self.intercepts[t]
                    + x.iter()
                        .enumerate()
                        .map(|(j, xj)| xj * self.slopes[(j, t)])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Fits `y ≈ b + x β` for each column of `y`.
///
/// Regressors are centered and scaled to unit norm, then solved with
/// pivoted QR; columns that are constant or numerically dependent get a
/// zero slope. `ridge > 0` adds the penalty `ridge · ‖β_scaled‖²`.
pub fn ols(x: &Matrix, y: &Matrix, ridge: f64) -> Result<OlsFit> {
    let (n, p) = (x.rows(), x.cols());
    if y.rows() != n {
        return Err(Error::ShapeMismatch(x.rows(), x.cols(), y.rows(), y.cols()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "least squares needs at least two rows".into(),
        ));
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge must be ≥ 0, got {ridge}")));
    }
    let x_mean: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let y_mean: Vec<f64> = (0..y.cols())
        .map(|j| (0..n).map(|i| y[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut scale = vec![1.0; p];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = (0..n)
            .map(|i| (x[(i, j)] - x_mean[j]).powi(2))
            .sum::<f64>()
            .sqrt();
        // columns that are constant up to rounding carry no information
        let magnitude = x_mean[j].abs() * (n as f64).sqrt();
        if norm > 1e-12 * magnitude.max(f64::MIN_POSITIVE) && norm > 0.0 {
            *s = norm;
        } else {
            *s = 0.0;
        }
    }
    let extra = if ridge > 0.0 { p } else { 0 };
    let mut design = Matrix::zeros(n + extra, p);
    let mut rhs = Matrix::zeros(n + extra, y.cols());
    for i in 0..n {
        for j in 0..p {
            if scale[j] > 0.0 {
                design[(i, j)] = (x[(i, j)] - x_mean[j]) / scale[j];
            }
        }
        for t in 0..y.cols() {
            rhs[(i, t)] = y[(i, t)] - y_mean[t];
        }
    }
    for j in 0..extra {
        if scale[j] > 0.0 {
            design[(n + j, j)] = ridge.sqrt();
        }
    }
    let ls = lstsq(&design, &rhs, RANK_TOLERANCE)?;
    let mut slopes = Matrix::zeros(p, y.cols());
    for j in 0..p {
        if scale[j] > 0.0 {
            for t in 0..y.cols() {
                slopes[(j, t)] = ls.coeffs[(j, t)] / scale[j];
            }
        }
    }
    let intercepts: Vec<f64> = (0..y.cols())
        .map(|t| y_mean[t] - (0..p).map(|j| x_mean[j] * slopes[(j, t)]).sum::<f64>())
        .collect();
    let mut fit = OlsFit {
        intercepts,
        slopes,
        rank: ls.rank,
        dropped: ls.dropped,
        stats: Vec::new(),
    };
    let fitted: Vec<Vec<f64>> = (0..n).map(|i| fit.predict_row(x.row(i))).collect();
    fit.stats = (0..y.cols())
        .map(|t| {
            let actual: Vec<f64> = y.column(t);
            let pred: Vec<f64> = fitted.iter().map(|f| f[t]).collect();
            fit_stats(&actual, &pred, fit.rank)
        })
        .collect();
    Ok(fit)
}

/// R², adjusted R² (with `regressors` explanatory variables besides the
/// intercept) and residual variance of a prediction.
pub fn fit_stats(actual: &[f64], predicted: &[f64], regressors: usize) -> FitStats {
    let n = actual.len();
    let mean = actual.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    let dof = n as f64 - regressors as f64 - 1.0;
    // without residual degrees of freedom the adjustment is undefined; report R²
    let adj_r2 = if dof > 0.0 {
        1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof
    } else {
        r2
    };
    let residual_variance = if dof > 0.0 { ss_res / dof } else { 0.0 };
    FitStats {
        r2,
        adj_r2,
        residual_variance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = Matrix::column_vector(&[1.0, 3.0, 5.0, 7.0]);
        let fit = ols(&x, &y, 0.0).unwrap();
        assert!((fit.intercepts[0] - 1.0).abs() < 1e-12);
        assert!((fit.slopes[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((fit.stats[0].r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_target_gives_intercept_only() {
        let x = Matrix::from_rows(&[vec![0.0, 5.0], vec![1.0, 5.0], vec![2.0, 5.0], vec![4.0, 5.0]]).unwrap();
        let y = Matrix::column_vector(&[2.5; 4]);
        let fit = ols(&x, &y, 0.0).unwrap();
        assert_eq!(fit.intercepts[0], 2.5);
        assert_eq!(fit.slopes[(0, 0)], 0.0);
        assert_eq!(fit.slopes[(1, 0)], 0.0);
        assert!(fit.dropped.contains(&1));
    }

    #[test]
    fn ridge_shrinks_slopes() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = Matrix::column_vector(&[0.0, 1.0, 2.0, 3.1]);
        let plain = ols(&x, &y, 0.0).unwrap();
        let shrunk = ols(&x, &y, 10.0).unwrap();
        assert!(shrunk.slopes[(0, 0)].abs() < plain.slopes[(0, 0)].abs());
        assert!(ols(&x, &y, -1.0).is_err());
    }

    #[test]
    fn adjusted_r2_never_exceeds_r2() {
        let actual = [1.0, 2.0, 0.5, 3.0, 2.2, 1.1];
        let pred = [1.1, 1.8, 0.9, 2.5, 2.0, 1.3];
        for k in 0..5 {
            let s = fit_stats(&actual, &pred, k);
            assert!(s.adj_r2 <= s.r2 + 1e-15);
            assert!(s.r2 <= 1.0);
        }
    }
}
