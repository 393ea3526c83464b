//! Expected-signature regression for univariate time series.
//!
//! Exact arithmetic in the truncated tensor algebra over `R^d`, signatures of
//! piecewise-linear paths and time series, inversion of signatures and
//! expected signatures, the ES(p, q, n, m) regression model, AR and
//! Gaussian-process baselines, synthetic data generators and the
//! cross-validation harness.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod datagen;
pub mod embedding;
pub mod error;
pub mod es;
pub mod experiment;
pub mod linalg;
pub mod recovery;
pub mod regression;
pub mod signature;
pub mod tensor;

pub use baselines::ar::ArModel;
pub use baselines::gp::{gp_fit, se_kernel, GpFitOptions, GpHyperparams, GpModel};
pub use embedding::{
    embed, embed_piecewise_linear, embed_time_joined, rebase_window, Embedding, PiecewiseLinearPath,
    RebasePolicy, TimeSeries,
};
pub use error::{Error, Result};
pub use es::{induced_covariance, moments_from_mu, EsSpec, FittedEsModel, MeanPrediction, TargetMode};
pub use recovery::{build_separating_forms, reconstruct_time_series, recover_mixture_weights};
pub use signature::{oracle_iterated_integral, signature, signature_of_time_series, signature_with_embedding};
pub use tensor::{shuffle_words, tensor_size, LinearForm, TruncatedTensor, Word};
