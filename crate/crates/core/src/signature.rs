//! Truncated signatures of piecewise-linear paths and time series.
//!
//! A linear segment with increment `v` has signature `exp(v)`, and Chen's
//! identity turns a concatenation into a tensor product, so the signature of
//! a piecewise-linear path is the ordered product of its segment exponentials.

use crate::embedding::{embed, Embedding, PiecewiseLinearPath, TimeSeries};
use crate::error::{Error, Result};
use crate::tensor::{TruncatedTensor, Word};

/// Truncated signature of a piecewise-linear path.
pub fn signature(path: &PiecewiseLinearPath, degree: usize) -> TruncatedTensor {
    let mut sig = TruncatedTensor::one(path.dim(), degree);
    for inc in path.increments() {
        sig.mul_exp_in_place(&inc);
    }
    sig
}

/// Signature of the time-joined path of `ts`, computed directly as
/// `exp(r_0 e_2) ⊗ ∏_i exp((t_{i+1} - t_i) e_1) ⊗ exp((r_{i+1} - r_i) e_2)`.
pub fn signature_of_time_series(ts: &TimeSeries, degree: usize) -> TruncatedTensor {
    let t = ts.times();
    let r = ts.values();
    let mut sig = TruncatedTensor::one(2, degree);
    sig.mul_exp_in_place(&[0.0, r[0]]);
    for i in 0..t.len() - 1 {
        sig.mul_exp_in_place(&[t[i + 1] - t[i], 0.0]);
        sig.mul_exp_in_place(&[0.0, r[i + 1] - r[i]]);
    }
    sig
}

/// Signature of `ts` under the chosen embedding.
pub fn signature_with_embedding(
    ts: &TimeSeries,
    degree: usize,
    embedding: Embedding,
) -> TruncatedTensor {
    match embedding {
        Embedding::TimeJoined => signature_of_time_series(ts, degree),
        Embedding::Linear => signature(&embed(ts, embedding), degree),
    }
}

/// Brute-force coordinate iterated integral `∫_{u_1<...<u_k} dX^{i_1}...dX^{i_k}`.
///
/// Left-endpoint Riemann recursion on a uniform grid of `steps` cells over
/// the path parameter; first-order accurate. Independent of the tensor
/// algebra, used as a test oracle.
pub fn oracle_iterated_integral(path: &PiecewiseLinearPath, word: &Word, steps: usize) -> Result<f64> {
    if steps < 10 * word.len().max(1) {
        return Err(Error::InvalidArgument(format!(
            "oracle needs at least {} steps for a word of length {}",
            10 * word.len().max(1),
            word.len()
        )));
    }
    if word.max_letter() > path.dim() {
        return Err(Error::LetterOutOfRange {
            letter: word.max_letter(),
            dim: path.dim(),
        });
    }
    let letters = word.letters();
    let span = path.num_segments() as f64;
    // partial[k] = running integral of the first k letters
    let mut partial = vec![0.0; letters.len() + 1];
    partial[0] = 1.0;
    let mut prev = path.at(0.0);
    for j in 1..=steps {
        let cur = path.at(span * j as f64 / steps as f64);
        for k in (1..=letters.len()).rev() {
            let axis = letters[k - 1] - 1;
            partial[k] += partial[k - 1] * (cur[axis] - prev[axis]);
        }
        prev = cur;
    }
    Ok(partial[letters.len()])
}
