//! Conditional densities of label distributions on the probability simplex.
//!
//! A label distribution ℓ ∈ Δ^{L-1} is modelled given features x by a
//! squared shallow network with exp activation and sufficient statistic
//! log ℓ:
//!
//! ```text
//! p(ℓ | x) = ‖V·exp(W1·log ℓ + W2·t2(x) + b)‖² / vec(VᵀV)ᵀ vec(K(x))
//! ```
//!
//! The normalizer K(x) is a matrix of Dirichlet integrals with a closed form,
//! and so are the conditional mean, variance and covariance of every label.
//! On top of the density the crate provides maximum-likelihood training,
//! split-conformal intervals, importance-sampled differential entropy for
//! active learning, and density-weighted ensembling.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`simplex`] | label distributions, flooring, uniform simplex sampling |
//! | [`kernel`] | closed-form kernel entries and the normalizer matrix |
//! | [`density`] | conditional log-density and a normalization check |
//! | [`moments`] | conditional moments and Chebyshev intervals |
//! | [`training`] | NLL, analytic gradients, mini-batch training, max-entropy baseline |
//! | [`uncertainty`] | entropy estimation, conformal calibration, FSC |
//! | [`harness`] | LDL metrics, active learning, ensembling |
//! | [`synthetic`] | data generators with known conditional densities |
//! | [`report`] | fixed-precision number formatting |

// negated comparisons deliberately treat NaN as invalid
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod density;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod model;
pub mod report;
pub mod moments;
pub mod rng;
pub mod simplex;
pub mod special;
pub mod synthetic;
pub mod training;
pub mod uncertainty;

pub use dataset::LdlDataset;
pub use harness::{
    active_learning_round, active_select, bagging_experiment, ensemble_predict, ldl_metrics, ActiveConfig,
    EnsembleMode, MetricReport, Strategy,
};
pub use density::{log_density, normalization_check};
pub use error::{Error, Result};
pub use kernel::{kernel_matrix, log_kernel_entry, unnormalized_squared_norm, KernelMatrix};
pub use model::{Dims, FeatureMapParams, SnefyModel};
pub use moments::{
    chebyshev_interval, conditional_covariance, conditional_mean, conditional_variance, MomentReport,
};
pub use rng::SeededRng;
pub use simplex::{floor_normalize, sample_uniform_simplex, FeatureVector, LabelDistribution, EPS_FLOOR};
pub use training::{grad_nll, nll, train, MaxEntModel, TrainConfig, TrainReport};
pub use uncertainty::{
    calibrated_interval, calibration_scores, conformal_quantile, dirichlet_baseline_calibrate, entropy_estimate, fsc,
    ConformalCalibrator,
};
