//! Python bindings: signatures, shuffles, recovery, generators and the ES,
//! AR and GP models.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use expsig::baselines::ar::{lag_matrix, ArModel};
use expsig::baselines::gp::{gp_fit, GpFitOptions, GpModel};
use expsig::datagen::{generate as gen_series, GeneratorConfig, GeneratorKind};
use expsig::linalg::Matrix;
use expsig::{
    Embedding, EsSpec, FittedEsModel, PiecewiseLinearPath, TargetMode, TimeSeries,
    TruncatedTensor, Word,
};

fn to_py(e: expsig::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn series(values: Vec<f64>, times: Option<Vec<f64>>) -> PyResult<TimeSeries> {
    match times {
        Some(t) => TimeSeries::new(t, values),
        None => TimeSeries::uniform(values),
    }
    .map_err(to_py)
}

fn embedding(name: &str) -> PyResult<Embedding> {
    match name {
        "time-joined" => Ok(Embedding::TimeJoined),
        "linear" => Ok(Embedding::Linear),
        other => Err(PyValueError::new_err(format!(
            "unknown embedding {other:?}; use \"time-joined\" or \"linear\""
        ))),
    }
}

/// Truncated tensor series; coordinate words use letters 1..=dim.
#[pyclass(name = "Tensor", module = "expsig", from_py_object)]
#[derive(Clone)]
struct PyTensor {
    inner: TruncatedTensor,
}

#[pymethods]
impl PyTensor {
    /// Tensor from coefficients in graded lexicographic order.
    #[staticmethod]
    fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<f64>) -> PyResult<Self> {
        Ok(PyTensor {
            inner: TruncatedTensor::from_flat(dim, degree, coeffs).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    /// Coefficient of a word, e.g. `t.coeff([1, 2])`; `[]` is the scalar term.
    fn coeff(&self, word: Vec<usize>) -> PyResult<f64> {
        self.inner.coeff(&word).map_err(to_py)
    }

    /// All coefficients in graded lexicographic order.
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    /// Truncated tensor product.
    fn __mul__(&self, other: &PyTensor) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: self.inner.mul(&other.inner).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Tensor(dim={}, degree={})", self.inner.dim(), self.inner.degree())
    }
}

/// Signature of the piecewise-linear path through `points`.
#[pyfunction]
fn path_signature(points: Vec<Vec<f64>>, degree: usize) -> PyResult<PyTensor> {
    let path = PiecewiseLinearPath::new(points).map_err(to_py)?;
    Ok(PyTensor {
        inner: expsig::signature(&path, degree),
    })
}

/// Signature of a time series under the chosen embedding.
#[pyfunction]
#[pyo3(signature = (values, degree, times=None, embedding="time-joined"))]
fn series_signature(
    values: Vec<f64>,
    degree: usize,
    times: Option<Vec<f64>>,
    embedding: &str,
) -> PyResult<PyTensor> {
    let ts = series(values, times)?;
    Ok(PyTensor {
        inner: expsig::signature_with_embedding(&ts, degree, self::embedding(embedding)?),
    })
}

/// Shuffle product of two words as `[(word, multiplicity), ...]`.
#[pyfunction]
fn shuffle(a: Vec<usize>, b: Vec<usize>, dim: usize) -> PyResult<Vec<(Vec<usize>, f64)>> {
    let a = Word::new(a, dim).map_err(to_py)?;
    let b = Word::new(b, dim).map_err(to_py)?;
    Ok(expsig::shuffle_words(&a, &b, dim)
        .terms()
        .iter()
        .map(|(w, c)| (w.letters().to_vec(), *c))
        .collect())
}

/// Values of a time series rebuilt from its signature and observation times.
#[pyfunction]
fn reconstruct(signature: &PyTensor, times: Vec<f64>) -> PyResult<Vec<f64>> {
    let ts = expsig::reconstruct_time_series(&signature.inner, &times).map_err(to_py)?;
    Ok(ts.values().to_vec())
}

/// Mixture weights of `mixture = Σ w_i components[i]`.
#[pyfunction]
fn mixture_weights(mixture: &PyTensor, components: Vec<PyTensor>) -> PyResult<Vec<f64>> {
    let sigs: Vec<TruncatedTensor> = components.into_iter().map(|c| c.inner).collect();
    expsig::recover_mixture_weights(&mixture.inner, &sigs).map_err(to_py)
}

/// Simulated series as a dict with keys `t`, `r`, `m_true`, `v_true`.
#[pyfunction]
#[pyo3(signature = (kind, length, seed=0, sigma=0.7))]
fn generate(py: Python<'_>, kind: &str, length: usize, seed: u64, sigma: f64) -> PyResult<Py<PyAny>> {
    let kind = match kind {
        "ar" => GeneratorKind::default_ar(),
        "poly-ar" => GeneratorKind::PolyAr,
        "mix-poly-ar" => GeneratorKind::MixPolyAr,
        "arch" => GeneratorKind::Arch {
            beta: vec![0.0, 0.5],
            alpha: vec![0.2, 0.5],
        },
        other => return Err(PyValueError::new_err(format!("unknown generator {other:?}"))),
    };
    let cfg = GeneratorConfig {
        sigma,
        ..GeneratorConfig::new(kind, length, seed)
    };
    let data = gen_series(&cfg).map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("t", data.ts.times().to_vec())?;
    d.set_item("r", data.ts.values().to_vec())?;
    d.set_item("m_true", data.true_means)?;
    d.set_item("v_true", data.true_variances)?;
    Ok(d.into_any().unbind())
}

/// Expected-signature regression ES(p, q, n, m).
#[pyclass(name = "EsModel", module = "expsig")]
struct PyEsModel {
    inner: FittedEsModel,
}

#[pymethods]
impl PyEsModel {
    #[staticmethod]
    #[pyo3(signature = (values, times=None, p=2, q=1, n=3, m=2, mode="reduced", ridge=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        values: Vec<f64>,
        times: Option<Vec<f64>>,
        p: usize,
        q: usize,
        n: usize,
        m: usize,
        mode: &str,
        ridge: f64,
    ) -> PyResult<Self> {
        let mode = match mode {
            "reduced" => TargetMode::Reduced,
            "tensor" => TargetMode::Tensor,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let spec = EsSpec {
            p,
            q,
            n,
            m,
            mode,
            ridge,
            ..EsSpec::default()
        };
        let ts = series(values, times)?;
        Ok(PyEsModel {
            inner: FittedEsModel::fit(&ts, &spec).map_err(to_py)?,
        })
    }

    /// `(k, mean of r_{k+1})` for every window ending at `k`.
    #[pyo3(signature = (values, times=None))]
    fn predict(&self, values: Vec<f64>, times: Option<Vec<f64>>) -> PyResult<Vec<(usize, f64)>> {
        let ts = series(values, times)?;
        let preds = self.inner.predict_series(&ts).map_err(to_py)?;
        Ok(preds.into_iter().map(|(k, p)| (k, p.next_value())).collect())
    }

    #[getter]
    fn r2(&self) -> f64 {
        self.inner.r2()
    }

    #[getter]
    fn adj_r2(&self) -> f64 {
        self.inner.adj_r2()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Least-squares AR(p) with intercept.
#[pyclass(name = "ArModel", module = "expsig")]
struct PyArModel {
    inner: ArModel,
}

#[pymethods]
impl PyArModel {
    #[staticmethod]
    fn fit(values: Vec<f64>, p: usize) -> PyResult<Self> {
        let ts = TimeSeries::uniform(values).map_err(to_py)?;
        Ok(PyArModel {
            inner: ArModel::fit(&ts, p).map_err(to_py)?,
        })
    }

    /// One-step mean from lags ordered most recent first.
    fn predict(&self, lags: Vec<f64>) -> PyResult<f64> {
        if lags.len() != self.inner.order {
            return Err(PyValueError::new_err(format!("expected {} lags", self.inner.order)));
        }
        Ok(self.inner.predict(&lags))
    }

    /// `[intercept, φ_1, …, φ_p]`.
    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients.clone()
    }

    #[getter]
    fn r2(&self) -> f64 {
        self.inner.stats.r2
    }
}

/// Gaussian process regression with a squared-exponential kernel.
#[pyclass(name = "GpModel", module = "expsig")]
struct PyGpModel {
    inner: GpModel,
}

#[pymethods]
impl PyGpModel {
    /// Fits hyperparameters by maximum marginal likelihood.
    #[staticmethod]
    #[pyo3(signature = (x, y, restarts=5, seed=0, constant_mean=false))]
    fn fit(x: Vec<Vec<f64>>, y: Vec<f64>, restarts: usize, seed: u64, constant_mean: bool) -> PyResult<Self> {
        let x = Matrix::from_rows(&x).map_err(to_py)?;
        let opts = GpFitOptions {
            restarts,
            seed,
            constant_mean,
            ..GpFitOptions::default()
        };
        Ok(PyGpModel {
            inner: gp_fit(&x, &y, &opts).map_err(to_py)?,
        })
    }

    /// GP on lag vectors `[r_k, …, r_{k-p+1}]` predicting `r_{k+1}`.
    #[staticmethod]
    #[pyo3(signature = (values, p=3, restarts=5, seed=0))]
    fn fit_series(values: Vec<f64>, p: usize, restarts: usize, seed: u64) -> PyResult<Self> {
        if p == 0 || values.len() < p + 2 {
            return Err(PyValueError::new_err("series too short for the lag order"));
        }
        let idx: Vec<usize> = (p - 1..values.len() - 1).collect();
        let x = lag_matrix(&values, p, &idx).map_err(to_py)?;
        let y: Vec<f64> = idx.iter().map(|&k| values[k + 1]).collect();
        let opts = GpFitOptions {
            restarts,
            seed,
            ..GpFitOptions::default()
        };
        Ok(PyGpModel {
            inner: gp_fit(&x, &y, &opts).map_err(to_py)?,
        })
    }

    /// Posterior `(mean, variance)` at `x`.
    fn predict(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        if x.len() != self.inner.train_inputs().cols() {
            return Err(PyValueError::new_err("input dimension mismatch"));
        }
        Ok(self.inner.predict(&x))
    }

    /// `(h, lambda, noise_var)`.
    #[getter]
    fn hyperparams(&self) -> (f64, f64, f64) {
        let h = self.inner.hyper;
        (h.h, h.lambda, h.noise_var)
    }

    fn log_marginal_likelihood(&self) -> f64 {
        self.inner.log_marginal_likelihood()
    }
}

#[pymodule]
#[pyo3(name = "expsig")]
fn expsig_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyEsModel>()?;
    m.add_class::<PyArModel>()?;
    m.add_class::<PyGpModel>()?;
    m.add_function(wrap_pyfunction!(path_signature, m)?)?;
    m.add_function(wrap_pyfunction!(series_signature, m)?)?;
    m.add_function(wrap_pyfunction!(shuffle, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_weights, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
