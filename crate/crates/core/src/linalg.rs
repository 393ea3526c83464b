//! Small dense linear algebra kernels: pivoted QR least squares, Cholesky,
//! and LU solves with a condition estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn column_vector(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(self.rows, self.cols, other.rows, other.cols));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Result of a rank-revealing least-squares solve.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    /// `cols × nrhs`; coefficients of dropped columns are zero.
    pub coeffs: Matrix,
    pub rank: usize,
    /// Columns judged numerically dependent on the retained ones.
    pub dropped: Vec<usize>,
}

/// Minimizes `‖A x - B‖` column by column with Householder QR and column
/// pivoting. Columns whose residual norm falls below `rel_tol` times the
/// largest column norm are dropped (basic solution).
pub fn lstsq(a: &Matrix, b: &Matrix, rel_tol: f64) -> Result<LeastSquares> {
    if a.rows != b.rows {
        return Err(Error::ShapeMismatch(a.rows, a.cols, b.rows, b.cols));
    }
    let (m, n, nrhs) = (a.rows, a.cols, b.cols);
    // column-major working copies
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut rhs: Vec<Vec<f64>> = (0..nrhs).map(|j| b.column(j)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max).sqrt();
    let mut rank = 0;
    for k in 0..n.min(m) {
        // pivot on the largest remaining column norm (recomputed exactly)
        for j in k..n {
            norms[j] = dot(&cols[j][k..], &cols[j][k..]);
        }
        let (p, &best) = norms[k..]
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, v)| (i + k, v))
            .expect("non-empty range");
        if best.sqrt() <= rel_tol * max_norm || best == 0.0 {
            break;
        }
        cols.swap(k, p);
        perm.swap(k, p);
        norms.swap(k, p);

        let x = &cols[k][k..];
        let alpha = if x[0] >= 0.0 { -best.sqrt() } else { best.sqrt() };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > 0.0 {
            for col in cols[k..].iter_mut().chain(rhs.iter_mut()) {
                let seg = &mut col[k..];
                let f = 2.0 * dot(&v, seg) / vnorm2;
                for (s, vi) in seg.iter_mut().zip(&v) {
                    *s -= f * vi;
                }
            }
        }
        rank += 1;
    }
    let mut coeffs = Matrix::zeros(n, nrhs);
    for (r, rhs_col) in rhs.iter().enumerate() {
        let mut x = vec![0.0; rank];
        for i in (0..rank).rev() {
            let mut s = rhs_col[i];
            for j in i + 1..rank {
                s -= cols[j][i] * x[j];
            }
            x[i] = s / cols[i][i];
        }
        for i in 0..rank {
            coeffs[(perm[i], r)] = x[i];
        }
    }
    let mut dropped: Vec<usize> = perm[rank..].to_vec();
    dropped.sort_unstable();
    Ok(LeastSquares {
        coeffs,
        rank,
        dropped,
    })
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    /// Diagonal jitter that had to be added.
    pub jitter: f64,
}

impl Cholesky {
    /// Plain factorization; fails on a non-positive pivot.
    pub fn factor(a: &Matrix) -> Result<Self> {
        Self::factor_with_shift(a, 0.0)
    }

    fn factor_with_shift(a: &Matrix, shift: f64) -> Result<Self> {
        let n = a.rows;
        if a.cols != n {
            return Err(Error::ShapeMismatch(a.rows, a.cols, a.cols, a.rows));
        }
        if a.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                a[(i, i)] + shift
            } else {
                a[(i, j)]
            }
        });
        let llt = m
            .llt(faer::Side::Lower)
            .map_err(|_| Error::NotPositiveDefinite)?;
        let factor = llt.L();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                l[i * n + j] = factor[(i, j)];
            }
        }
        if (0..n).any(|i| !(l[i * n + i] > 0.0) || !l[i * n + i].is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Cholesky { n, l, jitter: shift })
    }

    /// Retries with diagonal jitter `start·trace/n`, doubling up to `stop·trace/n`.
    pub fn factor_with_jitter(a: &Matrix, start: f64, stop: f64) -> Result<Self> {
        if let Ok(c) = Self::factor(a) {
            return Ok(c);
        }
        let n = a.rows.max(1);
        let mean_diag = (0..a.rows).map(|i| a[(i, i)]).sum::<f64>().abs() / n as f64;
        let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
        let mut rel = start;
        while rel <= stop * (1.0 + 1e-12) {
            if let Ok(c) = Self::factor_with_shift(a, rel * scale) {
                return Ok(c);
            }
            rel *= 2.0;
        }
        Err(Error::NotPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l(i, i).ln()).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            y[i] = (y[i] - dot(row, &y[..i])) / self.l[i * n + i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[i * n + i];
            let xi = x[i];
            let row = &self.l[i * n..i * n + i];
            for (xk, lik) in x[..i].iter_mut().zip(row) {
                *xk -= lik * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Explicit inverse of `A`.
    pub fn inverse(&self) -> Matrix {
        let n = self.n;
        // W = L^{-1}, row-major lower triangular
        let mut w = Matrix::zeros(n, n);
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            let col = self.solve_lower(&e);
            for (i, v) in col.into_iter().enumerate() {
                w[(i, c)] = v;
            }
        }
        // A^{-1} = Wᵀ W; entry (i, j) = Σ_k W_ki W_kj with k ≥ max(i, j)
        let wt = w.transpose();
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&wt.row(i)[i..], &wt.row(j)[i..]);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }
}

/// Solves a square system by LU with partial pivoting and returns the
/// solution together with the 1-norm condition number.
pub fn solve_with_condition(a: &Matrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::ShapeMismatch(a.rows, a.cols, b.len(), 1));
    }
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
            .expect("non-empty");
        if lu[(p, k)] == 0.0 {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            piv.swap(k, p);
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }
    let lu_solve = |rhs: &[f64]| -> Vec<f64> {
        let mut x: Vec<f64> = piv.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= lu[(i, j)] * x[j];
            }
            x[i] /= lu[(i, i)];
        }
        x
    };
    let norm1 = |m: &dyn Fn(usize, usize) -> f64| {
        (0..n)
            .map(|j| (0..n).map(|i| m(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut inv = Matrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        for (i, v) in lu_solve(&e).into_iter().enumerate() {
            inv[(i, c)] = v;
        }
    }
    let cond = norm1(&|i, j| a[(i, j)]) * norm1(&|i, j| inv[(i, j)]);
    Ok((lu_solve(b), cond))
}
