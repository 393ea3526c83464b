//! Inverse problems on signatures: rebuilding a time series from its
//! signature, and reading mixture weights off an expected signature.

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::{solve_with_condition, Matrix};
use crate::tensor::{LinearForm, TruncatedTensor, Word};

/// Largest condition number accepted for the Vandermonde solve.
pub const MAX_VANDERMONDE_CONDITION: f64 = 1e12;

/// Largest number of mixture components handled by [`build_separating_forms`].
pub const MAX_COMPONENTS: usize = 16;

/// Rebuilds the values of a time series from the signature of its
/// time-joined path, given the observation times.
///
/// With `τ_j = t_j - t_0`, the coordinates `A_k = (k-1)! π^{(1,…,1,2)}` (k-1
/// ones) satisfy `A_k = Σ_j τ_j^{k-1} Δr_j`, where `Δr_0 = r_0` and
/// `Δr_j = r_j - r_{j-1}`; the Vandermonde system is solved for `Δr`.
pub fn reconstruct_time_series(sig: &TruncatedTensor, times: &[f64]) -> Result<TimeSeries> {
    let len = times.len();
    if len == 0 {
        return Err(Error::InvalidArgument("no observation times given".into()));
    }
    if sig.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "time series signatures are 2-dimensional, got d = {}",
            sig.dim()
        )));
    }
    if sig.degree() < len {
        return Err(Error::DegreeTooLow {
            requested: len,
            available: sig.degree(),
        });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSeries(
            "times must be strictly increasing".into(),
        ));
    }
    let mut rhs = Vec::with_capacity(len);
    let mut factorial = 1.0;
    for k in 1..=len {
        if k > 1 {
            factorial *= (k - 1) as f64;
        }
        let mut letters = vec![1; k - 1];
        letters.push(2);
        rhs.push(factorial * sig.coeff(&letters)?);
    }
    let t0 = times[0];
    let mut vander = Matrix::zeros(len, len);
    for (j, &t) in times.iter().enumerate() {
        let tau = t - t0;
        let mut p = 1.0;
        for k in 0..len {
            vander[(k, j)] = p;
            p *= tau;
        }
    }
    let (increments, cond) = solve_with_condition(&vander, &rhs)?;
    if !(cond <= MAX_VANDERMONDE_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let values: Vec<f64> = increments
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect();
    TimeSeries::new(times.to_vec(), values)
}

/// Smallest word (by length, then lexicographically) on which the two
/// tensors differ by more than a relative `1e-12`.
pub fn separating_word(a: &TruncatedTensor, b: &TruncatedTensor) -> Option<Word> {
    a.iter_words()
        .zip(b.coeffs())
        .find(|((_, x), y)| (x - *y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())))
        .map(|((w, _), _)| w)
}

/// Linear forms `σ_i` with `σ_i(S_j) = δ_ij` on the given signatures.
///
/// For each pair a separating word `I_ij` is chosen and
/// `σ_i = ⧢_{j≠i} (a_ij π^{()} + b_ij π^{I_ij})` with
/// `a_ij = π^I(S_j) / (π^I(S_j) - π^I(S_i))` and
/// `b_ij = -1 / (π^I(S_j) - π^I(S_i))`, expanded into a single form.
/// The shuffle expansion has words up to `Σ_j |I_ij|` letters long, which
/// must not exceed the truncation degree of the inputs.
pub fn build_separating_forms(signatures: &[TruncatedTensor]) -> Result<Vec<LinearForm>> {
    let k = signatures.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > MAX_COMPONENTS {
        return Err(Error::TooManyComponents(k, MAX_COMPONENTS));
    }
    let (dim, degree) = (signatures[0].dim(), signatures[0].degree());
    if let Some(s) = signatures
        .iter()
        .find(|s| s.dim() != dim || s.degree() != degree)
    {
        return Err(Error::ShapeMismatch(dim, degree, s.dim(), s.degree()));
    }
    let mut words = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let w = separating_word(&signatures[i], &signatures[j])
                .ok_or(Error::Indistinguishable(i, j, degree))?;
            words[i][j] = Some(w.clone());
            words[j][i] = Some(w);
        }
    }
    let mut forms = Vec::with_capacity(k);
    for i in 0..k {
        let needed: usize = words[i].iter().flatten().map(Word::len).sum();
        if needed > degree {
            return Err(Error::DegreeTooLow {
                requested: needed,
                available: degree,
            });
        }
        let mut sigma = LinearForm::unit(dim);
        for j in (0..k).filter(|&j| j != i) {
            let w = words[i][j].clone().expect("separating word for every pair");
            let at_i = signatures[i].project(&w)?;
            let at_j = signatures[j].project(&w)?;
            let gap = at_j - at_i;
            let factor = LinearForm::unit(dim)
                .scale(at_j / gap)
                .add(&LinearForm::word(w, dim).scale(-1.0 / gap));
            sigma = sigma.shuffle(&factor);
        }
        forms.push(sigma);
    }
    Ok(forms)
}

/// Weights `λ_i = σ_i(E[S])` of a finite mixture of known signatures.
pub fn recover_mixture_weights(
    expected_sig: &TruncatedTensor,
    signatures: &[TruncatedTensor],
) -> Result<Vec<f64>> {
    build_separating_forms(signatures)?
        .iter()
        .map(|f| f.apply(expected_sig))
        .collect()
}
