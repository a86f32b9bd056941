//! Differential entropy of the conditional density and split-conformal
//! intervals with feature-stratified coverage.

mod baseline;
mod conformal;
mod entropy;

pub use baseline::{dirichlet_baseline_calibrate, dirichlet_log_pdf, fit_concentration, DirichletBaseline};
pub use conformal::{
    calibrated_interval, calibration_score, calibration_scores, conformal_quantile, conformal_report, coverage, fsc,
    interval_from, predict_intervals, ConformalCalibrator, ConformalReport, FscRow, Interval, IntervalModel,
};
pub use entropy::{dirichlet_entropy, entropy_estimate, entropy_estimate_prepared, DEFAULT_N_ITER};
