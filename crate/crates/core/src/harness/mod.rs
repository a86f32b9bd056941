//! Experiment drivers: LDL metrics, entropy-driven active learning and
//! density-weighted ensembling.

mod active;
mod ensemble;
mod metrics;

pub use active::{
    active_learning_round, active_select, kmeans_select, top_k_indices, ActiveConfig, ActiveOutcome, Strategy,
    DEFAULT_N_INITIAL, DEFAULT_N_QUERY, KMEANS_ITERS,
};
pub use ensemble::{
    bagging_experiment, ensemble_predict, ensemble_weights, weighted_combine, BaggingOutcome, EnsembleMode,
    DEFAULT_N_BASE, DEFAULT_N_SAMPLE,
};
pub use metrics::{evaluate, evaluate_snefy, ldl_metrics, predict_mean, MetricReport};
